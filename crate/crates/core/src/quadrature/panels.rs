use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of a composite Gauss–Legendre rule on `[0, 1]`.
///
/// Breakpoints grow geometrically away from the origin (`0, δ, 3δ, 7δ, …`),
/// so each panel sits at least one panel-width away from the kernel's pole at
/// `u1 + u2 = −δ`. Panels are then split until each holds at least eight nodes
/// per half-period of `cos(order·π·u)`.
#[derive(Debug, Clone)]
pub(crate) struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Minimum nodes per half-period of the fastest oscillation.
const NODES_PER_HALF_PERIOD: f64 = 8.0;

pub(crate) fn nodes_per_panel(accuracy: f64) -> usize {
    let digits = -accuracy.log10();
    ((1.6 * digits).ceil() as usize).clamp(10, 32)
}

pub(crate) fn graded_rule(delta: f64, order: usize, accuracy: f64) -> PanelRule {
    let n = nodes_per_panel(accuracy);
    let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"));
    let pairs = gl.as_node_weight_pairs();

    let mut edges = vec![0.0];
    let mut width = delta;
    let mut x = 0.0;
    loop {
        x += width;
        if x >= 1.0 {
            break;
        }
        edges.push(x);
        width *= 2.0;
    }
    edges.push(1.0);

    let max_width = n as f64 / (NODES_PER_HALF_PERIOD * order.max(1) as f64);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for s in 0..pieces {
            let lo = a + s as f64 * h;
            let half = 0.5 * h;
            let mid = lo + half;
            for &(t, wt) in pairs {
                nodes.push(mid + half * t);
                weights.push(half * wt);
            }
        }
    }
    PanelRule { nodes, weights }
}

impl PanelRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `w_n · cos(p π x_n)` for every node.
    pub fn weighted_cosines(&self, p: usize) -> Vec<f64> {
        let k = p as f64 * PI;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * (k * x).cos())
            .collect()
    }
}
