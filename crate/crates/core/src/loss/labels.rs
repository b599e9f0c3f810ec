//! Holistic and digit-wise label encoding.
//!
//! Class 0 is the null class ("no jersey number ever legible"); class `j`
//! (1..K) is jersey number `j`. Digit heads have 11 classes: digits 0-9 plus
//! an "absent" state used for the null class and for the second digit of
//! single-digit numbers. Single-digit numbers occupy the first digit slot.

use crate::error::{Error, Result};

pub const DIGIT_CLASSES: usize = 11;
pub const DIGIT_ABSENT: usize = 10;

/// The holistic class space: fixed roster ordering with null at index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSpace {
    k: usize,
}

impl ClassSpace {
    pub fn new(k: usize) -> Result<ClassSpace> {
        if !(2..=100).contains(&k) {
            return Err(Error::invalid(format!("class count {k} outside 2..=100")));
        }
        Ok(ClassSpace { k })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn null_class(&self) -> usize {
        0
    }

    pub fn max_jersey(&self) -> u8 {
        (self.k - 1) as u8
    }

    pub fn class_of(&self, jersey: Option<u8>) -> Result<usize> {
        match jersey {
            None => Ok(0),
            Some(j) if j >= 1 && j <= self.max_jersey() => Ok(j as usize),
            Some(j) => Err(Error::invalid(format!(
                "jersey {j} outside roster 1..={}",
                self.max_jersey()
            ))),
        }
    }

    pub fn jersey_of(&self, class: usize) -> Result<Option<u8>> {
        match class {
            0 => Ok(None),
            c if c < self.k => Ok(Some(c as u8)),
            c => Err(Error::invalid(format!("class index {c} outside 0..{}", self.k))),
        }
    }

    /// Human-readable name: the number, or "null".
    pub fn name_of(&self, class: usize) -> String {
        match class {
            0 => "null".to_string(),
            c => c.to_string(),
        }
    }
}

/// Ground-truth triple for the three heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelTriple {
    /// Holistic class index in `[0, K)`.
    pub holistic: usize,
    /// First-digit index in `[0, 11)`; 10 = absent.
    pub first_digit: usize,
    /// Second-digit index in `[0, 11)`; 10 = absent.
    pub second_digit: usize,
}

pub fn encode_labels(jersey: Option<u8>, space: &ClassSpace) -> Result<LabelTriple> {
    let holistic = space.class_of(jersey)?;
    let (first_digit, second_digit) = match jersey {
        None => (DIGIT_ABSENT, DIGIT_ABSENT),
        Some(j) if j < 10 => (j as usize, DIGIT_ABSENT),
        Some(j) => ((j / 10) as usize, (j % 10) as usize),
    };
    Ok(LabelTriple {
        holistic,
        first_digit,
        second_digit,
    })
}

impl LabelTriple {
    pub fn decode(&self, space: &ClassSpace) -> Result<Option<u8>> {
        space.jersey_of(self.holistic)
    }

    pub fn holistic_one_hot(&self, k: usize) -> Vec<f64> {
        one_hot(self.holistic, k)
    }

    pub fn first_digit_one_hot(&self) -> Vec<f64> {
        one_hot(self.first_digit, DIGIT_CLASSES)
    }

    pub fn second_digit_one_hot(&self) -> Vec<f64> {
        one_hot(self.second_digit, DIGIT_CLASSES)
    }
}

pub fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}
