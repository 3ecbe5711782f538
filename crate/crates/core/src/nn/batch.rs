use serde::{Deserialize, Serialize};

/// A single labelled image, row-major pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<f64>,
    pub label: usize,
}

impl Example {
    pub fn new(input: Vec<f64>, label: usize) -> Self {
        Example { input, label }
    }
}

/// A borrowed mini-batch. Rows are examples.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    examples: &'a [&'a Example],
}

impl<'a> Batch<'a> {
    pub fn new(examples: &'a [&'a Example]) -> Self {
        Batch { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &'a [&'a Example] {
        self.examples
    }
}
