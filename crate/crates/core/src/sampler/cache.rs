use crate::model::{Dataset, ModelState};

/// Design columns of the current atoms plus their Gram matrix `XᵀX`,
/// maintained incrementally as atoms are added, removed or replaced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignCache {
    columns: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DesignCache {
    /// From-scratch build for every atom of `state`.
    pub fn rebuild(state: &ModelState, data: &Dataset) -> Self {
        let mut cache = DesignCache::default();
        for atom in &state.atoms {
            cache.push(atom.design_column_unchecked(data.columns(), data.n()));
        }
        cache
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn push(&mut self, column: Vec<f64>) {
        let dots: Vec<f64> = self.columns.iter().map(|c| dot(c, &column)).collect();
        for (row, d) in self.gram.iter_mut().zip(&dots) {
            row.push(*d);
        }
        let mut last = dots;
        last.push(dot(&column, &column));
        self.gram.push(last);
        self.columns.push(column);
    }

    pub fn remove(&mut self, j: usize) -> Vec<f64> {
        self.gram.remove(j);
        for row in &mut self.gram {
            row.remove(j);
        }
        self.columns.remove(j)
    }

    pub fn replace(&mut self, j: usize, column: Vec<f64>) -> Vec<f64> {
        let old = std::mem::replace(&mut self.columns[j], column);
        for i in 0..self.columns.len() {
            let d = dot(&self.columns[i], &self.columns[j]);
            self.gram[i][j] = d;
            self.gram[j][i] = d;
        }
        old
    }

    /// Largest absolute difference to another cache of the same shape.
    pub fn max_abs_diff(&self, other: &DesignCache) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        let cols = self
            .columns
            .iter()
            .zip(&other.columns)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()));
        let gram = self
            .gram
            .iter()
            .zip(&other.gram)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()));
        cols.chain(gram).fold(0.0, f64::max)
    }
}
