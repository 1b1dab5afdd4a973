#![allow(dead_code)]

use crossstack::cell::TransistorParams;
use crossstack::device::DeviceParams;
use crossstack::fabric::{Admittance, Fabric, FabricGeometry, Netlist, NodeKind};
use crossstack::pipeline::{EventKind, TimingParams};
use crossstack::Mode;

pub struct Mna {
    pub voltages: Vec<f64>,
    pub column_currents: Vec<f64>,
    pub input_currents: Vec<f64>,
}

/// Dense modified nodal analysis of a netlist: every terminal is an ideal voltage source
/// to ground and every zero-ohm branch a 0 V source, each with its own current unknown.
/// Solved by Gaussian elimination with partial pivoting.
pub fn mna(net: &Netlist<f64>, v_in: &[f64]) -> Mna {
    let nn = net.nodes.len();
    let g_node = net.ground;
    // Node unknowns for every node except ground.
    let idx: Vec<Option<usize>> = {
        let mut k = 0;
        (0..nn)
            .map(|i| {
                if i == g_node {
                    None
                } else {
                    k += 1;
                    Some(k - 1)
                }
            })
            .collect()
    };
    let n_v = nn - 1;
    let sources: Vec<(usize, f64)> = net
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n.kind {
            NodeKind::Input(k) => Some((i, v_in[k])),
            NodeKind::Output(_) => Some((i, 0.0)),
            _ => None,
        })
        .collect();
    let shorts: Vec<(usize, usize)> =
        net.branches.iter().filter(|b| matches!(b.g, Admittance::Short)).map(|b| (b.a, b.b)).collect();
    let size = n_v + sources.len() + shorts.len();
    let mut a = vec![vec![0.0; size + 1]; size];

    for b in &net.branches {
        if let Admittance::Finite(g) = b.g {
            let (ia, ib) = (idx[b.a], idx[b.b]);
            if let Some(i) = ia {
                a[i][i] += g;
            }
            if let Some(j) = ib {
                a[j][j] += g;
            }
            if let (Some(i), Some(j)) = (ia, ib) {
                a[i][j] -= g;
                a[j][i] -= g;
            }
        }
    }
    for (s, &(node, v)) in sources.iter().enumerate() {
        let row = n_v + s;
        let i = idx[node].unwrap();
        // Source current leaves the node into the source.
        a[i][row] += 1.0;
        a[row][i] = 1.0;
        a[row][size] = v;
    }
    for (s, &(p, q)) in shorts.iter().enumerate() {
        let row = n_v + sources.len() + s;
        if let Some(i) = idx[p] {
            a[i][row] += 1.0;
            a[row][i] += 1.0;
        }
        if let Some(j) = idx[q] {
            a[j][row] -= 1.0;
            a[row][j] -= 1.0;
        }
    }
    let x = gauss(a);
    let voltages: Vec<f64> = (0..nn).map(|i| idx[i].map_or(0.0, |k| x[k])).collect();
    let current_of = |node: usize| {
        let s = sources.iter().position(|&(n, _)| n == node).unwrap();
        x[n_v + s]
    };
    Mna {
        column_currents: net.outputs.iter().map(|&o| current_of(o)).collect(),
        input_currents: net.inputs.iter().map(|&i| -current_of(i)).collect(),
        voltages,
    }
}

fn gauss(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        assert!(piv.abs() > 1e-300, "singular oracle system");
        for r in c + 1..n {
            let f = a[r][c] / piv;
            if f != 0.0 {
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    x
}

pub fn ideal_switches() -> TransistorParams<f64> {
    TransistorParams { r_on: 0.0, g_off: 0.0, ..TransistorParams::default() }
}

/// Fabric with per-cell states `xs`, layer-major.
pub fn fabric_with_states(
    mode: Mode,
    n: usize,
    m: usize,
    r_wire: f64,
    xs: &[f64],
    switches: TransistorParams<f64>,
    re: Vec<bool>,
) -> Fabric<f64> {
    let geom = FabricGeometry::new(mode, n, m, r_wire);
    let devs = xs
        .iter()
        .map(|&x| crossstack::device::DeviceInstance::nominal(DeviceParams::default()).with_state(x))
        .collect();
    Fabric::from_devices(geom, devs, switches, re).unwrap()
}

pub fn legal_re(mode: Mode, pick: bool) -> Vec<bool> {
    match mode {
        Mode::Planar => vec![pick],
        Mode::Expansion => vec![pick, pick],
        Mode::DeepNet => vec![pick, !pick],
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Task {
    pub kind: EventKind,
    pub layer: usize,
    pub start: f64,
    pub end: f64,
}

/// Greedy discrete-event simulation of the two-layer engine. At every event time each
/// task whose inputs are ready starts if its physical layer is idle and no other task of
/// the same kind is running (one layer reads while the other writes).
pub fn simulate_deepnet(l: usize, t: &TimingParams) -> Vec<Task> {
    let mut tasks: Vec<Option<Task>> = vec![None; 2 * l];
    let id = |kind: EventKind, k: usize| 2 * k + usize::from(kind == EventKind::Read);
    let mut now = 0.0;
    loop {
        let done = |tasks: &[Option<Task>], i: usize, now: f64| tasks[i].is_some_and(|x| x.end <= now);
        let running = |tasks: &[Option<Task>], now: f64| -> Vec<Task> {
            tasks.iter().flatten().filter(|x| x.start <= now && now < x.end).copied().collect()
        };
        for k in 0..l {
            for kind in [EventKind::Write, EventKind::Read] {
                let i = id(kind, k);
                if tasks[i].is_some() {
                    continue;
                }
                let phys = k % 2;
                let run = running(&tasks, now);
                let layer_busy = run.iter().any(|x| x.layer == phys);
                let kind_busy = run.iter().any(|x| x.kind == kind);
                let ready = match kind {
                    EventKind::Write => k < 2 || done(&tasks, id(EventKind::Read, k - 2), now),
                    EventKind::Read => {
                        done(&tasks, id(EventKind::Write, k), now) && (k == 0 || done(&tasks, id(EventKind::Read, k - 1), now))
                    }
                };
                if ready && !layer_busy && !kind_busy {
                    let d = if kind == EventKind::Write { t.t_write_unit } else { t.t_read };
                    tasks[i] = Some(Task { kind, layer: phys, start: now, end: now + d });
                }
            }
        }
        if tasks.iter().all(|x| x.is_some_and(|x| x.end <= now)) {
            break;
        }
        now = tasks.iter().flatten().map(|x| x.end).filter(|&e| e > now).fold(f64::INFINITY, f64::min);
    }
    tasks.into_iter().flatten().collect()
}

pub fn oracle_total(tasks: &[Task]) -> f64 {
    tasks.iter().map(|x| x.end).fold(0.0, f64::max)
}
