//! Adaptive Gauss–Kronrod (7, 15) integration on intervals and Gauss–Legendre segment rules.

use gauss_quad::legendre::GaussLegendre;
use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Value, error estimate and integral of |f| on one interval.
#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Panel { a, b, value: kronrod * h, error: ((kronrod - gauss) * h).abs(), abs: abs * h.abs() }
}

/// Result of an adaptive 1D integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral1d {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive GK15 over [a, b] split at interior breakpoints, to relative tolerance `rel`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], rel: f64) -> Integral1d {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(gk15(f, w[0], w[1]));
    }
    let mut evaluations = 15 * heap.len();
    const MAX_PANELS: usize = 4000;
    loop {
        let (value, error, abs) = heap.iter().fold((0.0, 0.0, 0.0), |s, p| (s.0 + p.value, s.1 + p.error, s.2 + p.abs));
        let target = (rel * value.abs()).max(1e-15 * abs);
        if error <= target || heap.len() >= MAX_PANELS {
            return Integral1d { value: sum_panels(&heap), error, evaluations };
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(f, worst.a, m));
        heap.push(gk15(f, m, worst.b));
        evaluations += 30;
    }
}

/// Sum panels in interval order so the result does not depend on heap layout.
fn sum_panels(heap: &BinaryHeap<Panel>) -> f64 {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    super::pairwise_sum(&values)
}

/// Gauss–Legendre nodes and weights on each segment of [a, b] cut at `breaks`.
pub fn segment_rule(a: f64, b: f64, breaks: &[f64], nodes: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes.max(1)).expect("positive"));
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let h = 0.5 * (hi - lo);
        for &(x, wt) in rule.as_node_weight_pairs() {
            out.push((lo + h * (x + 1.0), wt * h));
        }
    }
    out
}
