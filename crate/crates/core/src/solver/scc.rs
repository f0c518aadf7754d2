//! Iterative Tarjan SCC decomposition.

/// Adjacency access for [`tarjan`].
pub trait Graph {
    fn num_vertices(&self) -> usize;
    fn successors(&self, v: u32) -> &[u32];
}

impl Graph for [Vec<u32>] {
    fn num_vertices(&self) -> usize {
        self.len()
    }

    fn successors(&self, v: u32) -> &[u32] {
        &self[v as usize]
    }
}

impl Graph for Vec<Vec<u32>> {
    fn num_vertices(&self) -> usize {
        self.len()
    }

    fn successors(&self, v: u32) -> &[u32] {
        &self[v as usize]
    }
}

/// Compressed adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Csr {
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
}

impl Csr {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut edges: Vec<(u32, u32)> = edges.into_iter().collect();
        edges.sort_unstable();
        let mut offsets = vec![0u32; n + 1];
        for &(s, _) in &edges {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            targets: edges.into_iter().map(|(_, t)| t).collect(),
        }
    }
}

impl Graph for Csr {
    fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    fn successors(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }
}

/// Strongly connected components in reverse topological order.
pub fn tarjan<G: Graph + ?Sized>(g: &G) -> Vec<Vec<u32>> {
    const UNSEEN: u32 = u32::MAX;
    let n = g.num_vertices();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0u32;
    // Frames: (vertex, next successor position).
    let mut frames: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            let succ = g.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w as usize] == UNSEEN {
                    index[w as usize] = counter;
                    low[w as usize] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_components() {
        let g: Vec<Vec<u32>> = vec![vec![1], vec![2], vec![0, 3], vec![3], vec![]];
        let mut comps: Vec<Vec<u32>> = tarjan(&g)
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000u32;
        let g = Csr::from_edges(n as usize, (0..n - 1).map(|v| (v, v + 1)));
        assert_eq!(tarjan(&g).len(), n as usize);
    }
}
