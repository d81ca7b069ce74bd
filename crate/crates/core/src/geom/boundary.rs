/// Sorted set of global node indices lying on the boundary of a part.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundarySet {
    nodes: Vec<usize>,
}

impl BoundarySet {
    pub fn new(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        Self { nodes }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            nodes: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
        }
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Dense membership mask over `n` nodes.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.nodes {
            m[i] = true;
        }
        m
    }
}
