//! Nodal DC solve: zero-ohm branches are collapsed with a union-find, the remaining
//! conductance matrix is reordered with reverse Cuthill-McKee and factorised with an
//! envelope (skyline) Cholesky.

use serde::Serialize;

use super::netlist::{Admittance, Netlist, NodeKind};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T> {
    pub node_voltages: Vec<T>,
    /// Current delivered into each column output.
    pub column_currents: Vec<T>,
    /// Memristor current per cell, in netlist cell order.
    pub device_currents: Vec<T>,
    /// Current sourced by each row driver.
    pub input_currents: Vec<T>,
    /// Current sunk by local ground through the write switches.
    pub ground_current: T,
    pub converged: bool,
    /// Worst KCL imbalance over unknown nodes, relative to that node's largest incident flow.
    pub residual_norm: T,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

enum Group<T> {
    Fixed(T),
    Unknown(usize),
}

/// Solves the network with `v_inputs[k]` applied at the k-th row head.
pub fn solve_dc<T: Scalar>(net: &Netlist<T>, v_inputs: &[T]) -> Result<SolveResult<T>> {
    if v_inputs.len() != net.inputs.len() {
        return Err(invalid(format!(
            "netlist has {} driven rows, got {} input voltages",
            net.inputs.len(),
            v_inputs.len()
        )));
    }
    if let Some(v) = v_inputs.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite input voltage {v}")));
    }

    let nn = net.nodes.len();
    let mut uf = UnionFind((0..nn).collect());
    for b in &net.branches {
        if let Admittance::Short = b.g {
            uf.union(b.a, b.b);
        }
    }
    let root: Vec<usize> = (0..nn).map(|i| uf.find(i)).collect();

    // Potential of every group that contains a terminal.
    let mut fixed: Vec<Option<(usize, T)>> = vec![None; nn];
    for (i, node) in net.nodes.iter().enumerate() {
        let v = match node.kind {
            NodeKind::Input(k) => v_inputs[k],
            NodeKind::Output(_) | NodeKind::Ground => T::zero(),
            NodeKind::Internal => continue,
        };
        match fixed[root[i]] {
            Some((j, _)) => {
                return Err(invalid(format!(
                    "terminals `{}` and `{}` are shorted together",
                    net.nodes[j].name, node.name
                )))
            }
            None => fixed[root[i]] = Some((i, v)),
        }
    }

    let mut group: Vec<Option<Group<T>>> = (0..nn).map(|_| None).collect();
    let mut unknown_rep = Vec::new();
    for i in 0..nn {
        let r = root[i];
        if group[r].is_none() {
            group[r] = Some(match fixed[r] {
                Some((_, v)) => Group::Fixed(v),
                None => {
                    unknown_rep.push(r);
                    Group::Unknown(unknown_rep.len() - 1)
                }
            });
        }
    }
    let nu = unknown_rep.len();

    // Finite branches between distinct groups.
    let edges: Vec<(usize, usize, T, usize)> = net
        .branches
        .iter()
        .enumerate()
        .filter_map(|(bi, b)| match b.g {
            Admittance::Finite(g) if root[b.a] != root[b.b] => Some((root[b.a], root[b.b], g, bi)),
            _ => None,
        })
        .collect();

    check_connected(net, &root, &fixed, &edges)?;

    let mut sys = SymmetricSystem::new(nu);
    for &(ra, rb, g, _) in &edges {
        match (&group[ra], &group[rb]) {
            (Some(Group::Unknown(i)), Some(Group::Unknown(j))) => sys.add_conductance(*i, *j, g),
            (Some(Group::Unknown(i)), Some(Group::Fixed(v))) | (Some(Group::Fixed(v)), Some(Group::Unknown(i))) => {
                sys.diag[*i] = sys.diag[*i] + g;
                sys.rhs[*i] = sys.rhs[*i] + g * *v;
            }
            _ => {}
        }
    }
    let x = sys.solve().map_err(|k| Error::Singular { node: net.nodes[unknown_rep[k]].name.clone() })?;

    let node_voltages: Vec<T> = (0..nn)
        .map(|i| match group[root[i]] {
            Some(Group::Fixed(v)) => v,
            Some(Group::Unknown(k)) => x[k],
            None => unreachable!(),
        })
        .collect();

    // Net outflow and flow magnitude per group.
    let mut outflow = vec![T::zero(); nn];
    let mut scale = vec![T::zero(); nn];
    for &(ra, rb, g, bi) in &edges {
        let b = &net.branches[bi];
        let i = g * (node_voltages[b.a] - node_voltages[b.b]);
        outflow[ra] = outflow[ra] + i;
        outflow[rb] = outflow[rb] - i;
        scale[ra] = scale[ra].max(i.abs());
        scale[rb] = scale[rb].max(i.abs());
    }
    let mut residual_norm = T::zero();
    for &r in &unknown_rep {
        if scale[r] > T::zero() {
            residual_norm = residual_norm.max(outflow[r].abs() / scale[r]);
        }
    }

    let column_currents = net.outputs.iter().map(|&o| -outflow[root[o]]).collect();
    let input_currents = net.inputs.iter().map(|&i| outflow[root[i]]).collect();
    let ground_current = -outflow[root[net.ground]];
    let device_currents = net
        .cells
        .iter()
        .map(|c| {
            let b = &net.branches[c.memristor];
            match b.g {
                Admittance::Finite(g) => g * (node_voltages[b.a] - node_voltages[b.b]),
                Admittance::Short => T::zero(),
            }
        })
        .collect();

    Ok(SolveResult {
        node_voltages,
        column_currents,
        device_currents,
        input_currents,
        ground_current,
        converged: residual_norm < T::lit(1e-9).max(T::epsilon() * T::lit(1e3)),
        residual_norm,
    })
}

/// Every unknown group must reach a terminal through nonzero conductances.
fn check_connected<T: Scalar>(
    net: &Netlist<T>,
    root: &[usize],
    fixed: &[Option<(usize, T)>],
    edges: &[(usize, usize, T, usize)],
) -> Result<()> {
    let nn = root.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
    for &(a, b, g, _) in edges {
        if g > T::zero() {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; nn];
    let mut stack: Vec<usize> = (0..nn).filter(|&r| root[r] == r && fixed[r].is_some()).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    match (0..nn).find(|&i| !seen[root[i]]) {
        Some(i) => Err(Error::FloatingNode { node: net.nodes[i].name.clone() }),
        None => Ok(()),
    }
}

/// Symmetric positive-definite system assembled from two-terminal conductances.
struct SymmetricSystem<T> {
    diag: Vec<T>,
    adj: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
}

impl<T: Scalar> SymmetricSystem<T> {
    fn new(n: usize) -> Self {
        Self { diag: vec![T::zero(); n], adj: vec![Vec::new(); n], rhs: vec![T::zero(); n] }
    }

    fn add_conductance(&mut self, i: usize, j: usize, g: T) {
        self.diag[i] = self.diag[i] + g;
        self.diag[j] = self.diag[j] + g;
        self.adj[i].push((j, -g));
        self.adj[j].push((i, -g));
    }

    /// Returns the solution, or the unknown index where a pivot failed.
    fn solve(mut self) -> std::result::Result<Vec<T>, usize> {
        let n = self.diag.len();
        for row in &mut self.adj {
            row.sort_by_key(|&(j, _)| j);
            row.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 = kept.1 + next.1;
                    true
                } else {
                    false
                }
            });
        }
        let perm = reverse_cuthill_mckee(&self.adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // Envelope storage: row i keeps columns first[i]..=i.
        let first: Vec<usize> = perm
            .iter()
            .enumerate()
            .map(|(i, &old)| self.adj[old].iter().map(|&(j, _)| inv[j]).filter(|&j| j < i).min().unwrap_or(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut env = vec![T::zero(); start[n]];
        let at = |i: usize, j: usize| start[i] + (j - first[i]);
        for (i, &old) in perm.iter().enumerate() {
            env[at(i, i)] = self.diag[old];
            for &(j_old, g) in &self.adj[old] {
                let j = inv[j_old];
                if j < i {
                    env[at(i, j)] = env[at(i, j)] + g;
                }
            }
        }

        for i in 0..n {
            for j in first[i]..i {
                let k0 = first[i].max(first[j]);
                let mut s = env[at(i, j)];
                for k in k0..j {
                    s = s - env[at(i, k)] * env[at(j, k)];
                }
                env[at(i, j)] = s / env[at(j, j)];
            }
            let mut d = env[at(i, i)];
            for k in first[i]..i {
                d = d - env[at(i, k)] * env[at(i, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(perm[i]);
            }
            env[at(i, i)] = d.sqrt();
        }

        let mut y: Vec<T> = perm.iter().map(|&old| self.rhs[old]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in first[i]..i {
                s = s - env[at(i, k)] * y[k];
            }
            y[i] = s / env[at(i, i)];
        }
        for i in (0..n).rev() {
            y[i] = y[i] / env[at(i, i)];
            let xi = y[i];
            for k in first[i]..i {
                y[k] = y[k] - env[at(i, k)] * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// Bandwidth-reducing ordering; `result[new] = old`.
fn reverse_cuthill_mckee<T>(adj: &[Vec<(usize, T)>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &s in &by_degree {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[u].iter().map(|&(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            nbrs.dedup();
            for j in nbrs {
                visited[j] = true;
                order.push(j);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_small() {
        // Path 0 - 1 - 2 with each end tied to a 1 V source through 1 S.
        let mut s = SymmetricSystem::<f64>::new(3);
        s.add_conductance(0, 1, 2.0);
        s.add_conductance(1, 2, 2.0);
        s.diag[0] += 1.0;
        s.rhs[0] += 1.0;
        s.diag[2] += 1.0;
        s.rhs[2] += 1.0;
        let x = s.solve().unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_pivot_reported() {
        let mut s = SymmetricSystem::<f64>::new(2);
        s.add_conductance(0, 1, 1.0);
        assert!(s.solve().is_err());
    }

    #[test]
    fn rcm_is_permutation() {
        let adj: Vec<Vec<(usize, f64)>> = vec![vec![(3, 1.0)], vec![(2, 1.0)], vec![(1, 1.0), (3, 1.0)], vec![(0, 1.0), (2, 1.0)], vec![]];
        let mut p = reverse_cuthill_mckee(&adj);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }
}
