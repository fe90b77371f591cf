/// Disjoint-set forest over `0..n`, tuned for the enumeration hot loop:
/// a baseline forest is built once and copied into a scratch instance per
/// configuration, so the reset is a pair of memcpys.
#[derive(Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `x`, with path halving.
    pub fn find(&mut self, mut x: u32) -> u32 {
        loop {
            let p = self.parent[x as usize];
            if p == x {
                return x;
            }
            let gp = self.parent[p as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
    }

    /// Merges the sets of `a` and `b`; the smaller root index wins, which
    /// keeps the representative deterministic.
    pub fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
    }

    pub fn connected(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    /// Overwrites this forest with the state of `other`. Both must have the
    /// same length.
    pub fn copy_from(&mut self, other: &UnionFind) {
        self.parent.copy_from_slice(&other.parent);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unions_and_finds() {
        let mut uf = UnionFind::new(6);
        uf.union(0, 1);
        uf.union(2, 3);
        assert!(uf.connected(0, 1));
        assert!(!uf.connected(1, 2));
        uf.union(1, 3);
        assert!(uf.connected(0, 2));
        assert!(!uf.connected(0, 5));
    }

    #[test]
    fn smallest_index_is_representative() {
        let mut uf = UnionFind::new(4);
        uf.union(3, 2);
        uf.union(2, 1);
        assert_eq!(uf.find(3), 1);
        uf.union(0, 3);
        assert_eq!(uf.find(2), 0);
    }

    #[test]
    fn copy_from_resets_scratch() {
        let mut base = UnionFind::new(4);
        base.union(0, 1);
        let mut scratch = base.clone();
        scratch.union(2, 3);
        assert!(scratch.connected(2, 3));
        scratch.copy_from(&base);
        assert!(!scratch.connected(2, 3));
        assert!(scratch.connected(0, 1));
    }
}
