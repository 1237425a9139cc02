use std::collections::HashMap;

use crate::error::{Error, Result};

/// Records addressable by an item uid.
pub trait HasUid {
    fn uid(&self) -> &str;
}

impl<T: HasUid> HasUid for &T {
    fn uid(&self) -> &str {
        (*self).uid()
    }
}

/// Result of an inner join on uid.
#[derive(Debug)]
pub struct Join<'a, L, R> {
    /// Matched pairs, in the order of the left input.
    pub rows: Vec<(&'a L, &'a R)>,
    pub unmatched_left: Vec<&'a str>,
    pub unmatched_right: Vec<&'a str>,
}

impl<L, R> Join<'_, L, R> {
    /// One-line summary of the unmatched uids on both sides.
    pub fn report(&self) -> String {
        format!(
            "{} joined, {} unmatched on the left, {} unmatched on the right",
            self.rows.len(),
            self.unmatched_left.len(),
            self.unmatched_right.len()
        )
    }
}

/// Inner join of two uid-keyed collections. A uid repeated on either side is an error.
pub fn join_by_uid<'a, L: HasUid, R: HasUid>(left: &'a [L], right: &'a [R]) -> Result<Join<'a, L, R>> {
    let left_index = index_by_uid(left)?;
    let right_index = index_by_uid(right)?;
    let mut rows = Vec::new();
    let mut unmatched_left = Vec::new();
    for l in left {
        match right_index.get(l.uid()) {
            Some(r) => rows.push((l, *r)),
            None => unmatched_left.push(l.uid()),
        }
    }
    let unmatched_right = right
        .iter()
        .map(HasUid::uid)
        .filter(|uid| !left_index.contains_key(uid))
        .collect();
    Ok(Join {
        rows,
        unmatched_left,
        unmatched_right,
    })
}

fn index_by_uid<T: HasUid>(records: &[T]) -> Result<HashMap<&str, &T>> {
    let mut index = HashMap::with_capacity(records.len());
    for record in records {
        if index.insert(record.uid(), record).is_some() {
            return Err(Error::DuplicateUid(record.uid().to_string()));
        }
    }
    Ok(index)
}
