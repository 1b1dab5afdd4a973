use std::fmt::Write as _;

use serde::Serialize;

use super::FabricGeometry;
use crate::cell::CellInstance;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// Row head driven by input `k` (layer-major row order).
    Input(usize),
    /// Column tail held at virtual ground by the sense amplifier of column `k`.
    Output(usize),
    Ground,
    Internal,
}

impl NodeKind {
    pub fn is_fixed(self) -> bool {
        !matches!(self, NodeKind::Internal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Admittance<T> {
    Finite(T),
    /// Zero-ohm connection; the solver merges its endpoints.
    Short,
}

impl<T: Scalar> Admittance<T> {
    pub fn from_resistance(r: T) -> Self {
        if r > T::zero() {
            Admittance::Finite(r.recip())
        } else {
            Admittance::Short
        }
    }

    pub fn from_option(g: Option<T>) -> Self {
        g.map_or(Admittance::Short, Admittance::Finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchKind {
    RowWire,
    ColumnWire,
    Memristor,
    /// N1, internal node to column.
    ReadSwitch,
    /// N2, internal node to ground.
    WriteSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch<T> {
    pub a: usize,
    pub b: usize,
    pub g: Admittance<T>,
    pub kind: BranchKind,
}

/// Where a cell sits in the netlist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellTaps {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    /// The memristor branch, oriented row node -> internal node.
    pub memristor: usize,
    /// RE high: the cell's low-impedance path ends on the column.
    pub reads: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Netlist<T> {
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch<T>>,
    /// Row-head nodes, one per driven row.
    pub inputs: Vec<usize>,
    /// Column-tail nodes, one per column.
    pub outputs: Vec<usize>,
    pub ground: usize,
    pub cells: Vec<CellTaps>,
}

impl<T: Scalar> Netlist<T> {
    fn empty() -> Self {
        Self { nodes: Vec::new(), branches: Vec::new(), inputs: Vec::new(), outputs: Vec::new(), ground: 0, cells: Vec::new() }
    }

    fn node(&mut self, name: String, kind: NodeKind) -> usize {
        self.nodes.push(Node { name, kind });
        self.nodes.len() - 1
    }

    fn branch(&mut self, a: usize, b: usize, g: Admittance<T>, kind: BranchKind) -> usize {
        self.branches.push(Branch { a, b, g, kind });
        self.branches.len() - 1
    }

    pub fn memristor_count(&self) -> usize {
        self.branches.iter().filter(|b| b.kind == BranchKind::Memristor).count()
    }

    /// Number of cells whose read path lands on each column.
    pub fn read_paths_per_column(&self) -> Vec<usize> {
        let cols = self.outputs.len();
        let mut counts = vec![0; cols];
        for c in self.cells.iter().filter(|c| c.reads) {
            counts[c.col] += 1;
        }
        counts
    }

    /// Plain-text branch list, one `node_a node_b conductance_S` line per branch.
    /// Zero-ohm branches print `inf`.
    pub fn to_branch_list(&self) -> String {
        let mut s = String::from("# node_a node_b conductance_S\n");
        for b in &self.branches {
            let g = match b.g {
                Admittance::Finite(g) => format!("{:e}", g.as_f64()),
                Admittance::Short => "inf".to_string(),
            };
            let _ = writeln!(s, "{} {} {}", self.nodes[b.a].name, self.nodes[b.b].name, g);
        }
        s
    }
}

/// Assembles the resistive network for `cells` laid out layer-major.
///
/// Each layer's rows are driven at the row head and run across the columns in
/// `r_wire_per_cell` segments. All layers share one set of column wires: the column
/// node at row position `r` collects every layer's cell at that position, and the column
/// tail connects through one more segment to its virtually grounded output.
pub fn build_netlist<T: Scalar>(
    geom: &FabricGeometry<T>,
    cells: &[CellInstance<T>],
    re: &[bool],
) -> Result<Netlist<T>> {
    geom.validate()?;
    if cells.len() != geom.cell_count() {
        return Err(invalid(format!(
            "cell grid has {} cells, geometry {}x{}x{} needs {}",
            cells.len(),
            geom.rows_per_layer,
            geom.cols,
            geom.layers,
            geom.cell_count()
        )));
    }
    geom.mode.check_re(re)?;

    let (n, m) = (geom.rows_per_layer, geom.cols);
    let wire = Admittance::from_resistance(geom.r_wire_per_cell);
    let mut net = Netlist::empty();
    net.ground = net.node("gnd".into(), NodeKind::Ground);

    // Column nodes shared across layers, then the sense-amplifier outputs.
    let col_node: Vec<Vec<usize>> = (0..n)
        .map(|r| (0..m).map(|c| net.node(format!("c{r}_{c}"), NodeKind::Internal)).collect())
        .collect();
    for c in 0..m {
        let out = net.node(format!("out{c}"), NodeKind::Output(c));
        net.outputs.push(out);
        for r in 0..n.saturating_sub(1) {
            net.branch(col_node[r][c], col_node[r + 1][c], wire, BranchKind::ColumnWire);
        }
        net.branch(col_node[n - 1][c], out, wire, BranchKind::ColumnWire);
    }

    for l in 0..geom.layers {
        let re_high = re[l];
        for r in 0..n {
            let head = net.node(format!("in{l}_{r}"), NodeKind::Input(l * n + r));
            net.inputs.push(head);
            let mut prev = head;
            for c in 0..m {
                let cell = &cells[geom.index(l, r, c)];
                let row_node = net.node(format!("r{l}_{r}_{c}"), NodeKind::Internal);
                net.branch(prev, row_node, wire, BranchKind::RowWire);
                prev = row_node;

                let x = net.node(format!("x{l}_{r}_{c}"), NodeKind::Internal);
                let mem = net.branch(
                    row_node,
                    x,
                    Admittance::Finite(cell.device.conductance()),
                    BranchKind::Memristor,
                );
                let (g_col, g_gnd) = cell.switch_conductances(re_high);
                net.branch(x, col_node[r][c], Admittance::from_option(g_col), BranchKind::ReadSwitch);
                net.branch(x, net.ground, Admittance::from_option(g_gnd), BranchKind::WriteSwitch);
                net.cells.push(CellTaps { layer: l, row: r, col: c, memristor: mem, reads: re_high });
            }
        }
    }
    Ok(net)
}
