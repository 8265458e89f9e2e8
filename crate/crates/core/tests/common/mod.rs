//! Shared oracles for the integration suites. Everything here is an
//! independent route: no function below calls the production code it is
//! used to check.

use auction_gan::{Activation, Mat, Mlp};

/// Brute-force min-cost transport by successive shortest augmenting paths
/// over a dense adjacency matrix (Bellman-Ford over all node pairs).
/// Written against the textbook formulation, independent of the library's
/// solvers.
pub fn transport_oracle(supply: &[f64], demand: &[f64], cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    let n = supply.len();
    let m = demand.len();
    let nodes = n + m + 2;
    let source = n + m;
    let sink = n + m + 1;

    // cap[u][v], cst[u][v] over a dense residual matrix.
    let mut cap = vec![vec![0.0f64; nodes]; nodes];
    let mut cst = vec![vec![0.0f64; nodes]; nodes];
    for i in 0..n {
        cap[source][i] = supply[i];
        for j in 0..m {
            cap[i][n + j] = f64::INFINITY;
            cst[i][n + j] = cost(i, j);
            cst[n + j][i] = -cost(i, j);
        }
    }
    for j in 0..m {
        cap[n + j][sink] = demand[j];
    }

    let eps = 1e-15;
    let mut total = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if !dist[u].is_finite() {
                    continue;
                }
                for v in 0..nodes {
                    if cap[u][v] > eps && dist[u] + cst[u][v] < dist[v] - 1e-18 {
                        dist[v] = dist[u] + cst[u][v];
                        prev[v] = u;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        if !(bottleneck > eps) {
            break;
        }
        let mut v = sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            total += bottleneck * cst[u][v];
            v = u;
        }
    }
    total
}

/// Spec gradient tolerance: relative error below 1e-4 where the gradient
/// has magnitude, absolute below 1e-7 where it is tiny.
pub fn gradients_agree(analytic: f64, numeric: f64) -> bool {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-3 {
        (analytic - numeric).abs() < 1e-7
    } else {
        (analytic - numeric).abs() / scale < 1e-4
    }
}

/// Central differences are invalid near ReLU kinks; reject evaluation
/// points whose pre-activations sit within `margin` of zero anywhere in
/// the network.
pub fn kink_safe(mlp: &Mlp, inputs: &Mat, margin: f64) -> bool {
    for b in 0..inputs.rows() {
        let mut cur = inputs.row(b).to_vec();
        for layer in mlp.layers() {
            let mut next = vec![0.0; layer.out_dim()];
            for o in 0..layer.out_dim() {
                let mut acc = layer.bias()[o];
                for i in 0..layer.in_dim() {
                    acc += layer.weights()[o * layer.in_dim() + i] * cur[i];
                }
                if matches!(layer.activation(), Activation::Relu) && acc.abs() < margin {
                    return false;
                }
                next[o] = layer.activation().apply(acc);
            }
            cur = next;
        }
    }
    true
}
