//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ancl_core::network::NetworkParams;

/// Sample autocorrelation by a direct double loop over the estimator.
pub fn acf_naive(x: &[f64], lag: usize) -> f64 {
    let t = x.len();
    let mut mean = 0.0;
    for v in x {
        mean += v;
    }
    mean /= t as f64;
    let mut num = 0.0;
    for i in 0..t - lag {
        num += (x[i + lag] - mean) * (x[i] - mean);
    }
    let mut den = 0.0;
    for v in x {
        den += (v - mean) * (v - mean);
    }
    num / den
}

/// Empirical quantile at 1-based fractional position `1 + (T - 1) tau`.
pub fn quantile_naive(x: &[f64], tau: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = 1.0 + (s.len() as f64 - 1.0) * tau;
    let lo = h.floor();
    let below = s[lo as usize - 1];
    if lo as usize >= s.len() {
        return below;
    }
    below + (h - lo) * (s[lo as usize] - below)
}

/// Quantile autocorrelation evaluated term by term from its definition.
pub fn qaf_naive(x: &[f64], tau: f64, tau2: f64, lag: usize) -> f64 {
    let q1 = quantile_naive(x, tau);
    let q2 = quantile_naive(x, tau2);
    let t = x.len();
    let mut hits = 0usize;
    for i in 0..t - lag {
        if x[i] <= q1 && x[i + lag] <= q2 {
            hits += 1;
        }
    }
    (hits as f64 / t as f64 - tau * tau2) / (tau * (1.0 - tau) * tau2 * (1.0 - tau2)).sqrt()
}

/// Roots of the monic cubic `z^3 + c2 z^2 + c1 z + c0` by Durand–Kerner
/// iteration, returned as `(re, im)` pairs.
pub fn monic_cubic_roots(c2: f64, c1: f64, c0: f64) -> [(f64, f64); 3] {
    type C = (f64, f64);
    let mul = |a: C, b: C| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let sub = |a: C, b: C| (a.0 - b.0, a.1 - b.1);
    let div = |a: C, b: C| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let eval = |z: C| {
        let z2 = mul(z, z);
        let z3 = mul(z2, z);
        (z3.0 + c2 * z2.0 + c1 * z.0 + c0, z3.1 + c2 * z2.1 + c1 * z.1)
    };
    let seed: C = (0.4, 0.9);
    let mut r = [(1.0, 0.0), seed, mul(seed, seed)];
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..3 {
            let mut den = (1.0, 0.0);
            for j in 0..3 {
                if j != i {
                    den = mul(den, sub(r[i], r[j]));
                }
            }
            if den.0 == 0.0 && den.1 == 0.0 {
                den = (1e-12, 0.0);
            }
            let step = div(eval(r[i]), den);
            r[i] = sub(r[i], step);
            delta = delta.max(step.0.hypot(step.1));
        }
        if delta < 1e-15 {
            break;
        }
    }
    r
}

/// Largest modulus among the inverse roots of `1 - phi1 z - phi2 z^2 - phi3 z^3`.
/// The AR polynomial is causal iff this is below one.
pub fn max_inverse_root_modulus(phi: [f64; 3]) -> f64 {
    monic_cubic_roots(-phi[0], -phi[1], -phi[2])
        .iter()
        .map(|(re, im)| re.hypot(*im))
        .fold(0.0, f64::max)
}

/// Independent forward pass used as the finite-difference oracle. Each
/// perturbed loss is recomputed only from the layers downstream of the
/// perturbed parameter, which keeps a full sweep over every coordinate cheap.
struct Reference<'a> {
    w: [&'a [f64]; 4],
    b: [&'a [f64]; 4],
    input: usize,
    hidden: usize,
    width: usize,
    y: f64,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Reference<'_> {
    fn loss_from_logit(&self, logit: f64) -> f64 {
        let p = (1.0 / (1.0 + (-logit).exp())).clamp(1e-7, 1.0 - 1e-7);
        -(self.y * p.ln() + (1.0 - self.y) * (1.0 - p).ln())
    }

    /// Loss given head pre-activations, with optional output-layer overrides.
    fn loss_from_head(&self, z: &[f64], w3: &[f64], b3: f64) -> f64 {
        let logit = b3 + z.iter().zip(w3).map(|(z, w)| w * relu(*z)).sum::<f64>();
        self.loss_from_logit(logit)
    }

    fn embed_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|o| self.b[0][o] + dot(&self.w[0][o * self.input..(o + 1) * self.input], x))
            .collect()
    }

    fn embed_out(&self, pre: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = pre.iter().map(|v| relu(*v)).collect();
        (0..self.width)
            .map(|o| self.b[1][o] + dot(&self.w[1][o * self.hidden..(o + 1) * self.hidden], &h))
            .collect()
    }

    fn head_pre(&self, pooled: &[f64]) -> Vec<f64> {
        self.b[2]
            .iter()
            .enumerate()
            .map(|(o, b)| b + dot(&self.w[2][o * self.width..(o + 1) * self.width], pooled))
            .collect()
    }

    /// Head pre-activations after adding `delta` to pooled coordinate `k`.
    fn shift_pooled(&self, z: &[f64], k: usize, delta: f64) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(o, v)| v + self.w[2][o * self.width + k] * delta)
            .collect()
    }
}

/// Worst relative disagreement between the analytic pair gradient and
/// central differences of an independently coded loss with step `h`.
///
/// Relative error is `|g - fd| / max(|g|, |fd|, floor)`; below `floor` the
/// finite-difference estimate is dominated by rounding and is compared on an
/// absolute scale instead.
pub fn gradient_check(params: &NetworkParams, a: &[f64], b: &[f64], same: bool, h: f64, floor: f64) -> f64 {
    let (_, grad) = params.pair_gradient(a, b, same).unwrap();
    let base = params.values().as_ptr() as usize;
    let offset = |s: &[f64]| (s.as_ptr() as usize - base) / std::mem::size_of::<f64>();
    let layers = [params.layer(0), params.layer(1), params.layer(2), params.layer(3)];
    let r = Reference {
        w: layers.map(|l| l.0),
        b: layers.map(|l| l.1),
        input: a.len(),
        hidden: layers[0].1.len(),
        width: layers[1].1.len(),
        y: if same { 1.0 } else { 0.0 },
    };
    let (pre_a, pre_b) = (r.embed_pre(a), r.embed_pre(b));
    let (out_a, out_b) = (r.embed_out(&pre_a), r.embed_out(&pre_b));
    let pooled: Vec<f64> = out_a.iter().zip(&out_b).map(|(x, y)| x + y).collect();
    let z = r.head_pre(&pooled);
    let (w3, b3) = (r.w[3], r.b[3][0]);

    let mut worst = 0.0f64;
    let mut compare = |flat: usize, up: f64, down: f64| {
        let fd = (up - down) / (2.0 * h);
        let g = grad.values()[flat];
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(floor));
    };

    // Output layer.
    let mut w3_probe = w3.to_vec();
    for (i, v) in w3.iter().enumerate() {
        w3_probe[i] = v + h;
        let up = r.loss_from_head(&z, &w3_probe, b3);
        w3_probe[i] = v - h;
        let down = r.loss_from_head(&z, &w3_probe, b3);
        w3_probe[i] = *v;
        compare(offset(w3) + i, up, down);
    }
    compare(offset(r.b[3]), r.loss_from_head(&z, w3, b3 + h), r.loss_from_head(&z, w3, b3 - h));

    // Head hidden layer: only one pre-activation moves.
    let shifted = |o: usize, delta: f64| {
        let mut zz = z.clone();
        zz[o] += delta;
        r.loss_from_head(&zz, w3, b3)
    };
    for o in 0..z.len() {
        for k in 0..r.width {
            let flat = offset(r.w[2]) + o * r.width + k;
            compare(flat, shifted(o, h * pooled[k]), shifted(o, -h * pooled[k]));
        }
        compare(offset(r.b[2]) + o, shifted(o, h), shifted(o, -h));
    }

    // Embedding output layer, shared by both series.
    let hid_a: Vec<f64> = pre_a.iter().map(|v| relu(*v)).collect();
    let hid_b: Vec<f64> = pre_b.iter().map(|v| relu(*v)).collect();
    let pooled_loss = |k: usize, delta: f64| r.loss_from_head(&r.shift_pooled(&z, k, delta), w3, b3);
    for k in 0..r.width {
        for i in 0..r.hidden {
            let s = hid_a[i] + hid_b[i];
            let flat = offset(r.w[1]) + k * r.hidden + i;
            compare(flat, pooled_loss(k, h * s), pooled_loss(k, -h * s));
        }
        compare(offset(r.b[1]) + k, pooled_loss(k, 2.0 * h), pooled_loss(k, -2.0 * h));
    }

    // Embedding hidden layer: one hidden unit of each series moves.
    let unit_loss = |o: usize, da: f64, db: f64| {
        let change = (relu(pre_a[o] + da) - relu(pre_a[o])) + (relu(pre_b[o] + db) - relu(pre_b[o]));
        let mut zz = z.clone();
        for (k, w1) in (0..r.width).map(|k| (k, r.w[1][k * r.hidden + o])) {
            let d = w1 * change;
            for (m, v) in zz.iter_mut().enumerate() {
                *v += r.w[2][m * r.width + k] * d;
            }
        }
        r.loss_from_head(&zz, w3, b3)
    };
    for o in 0..r.hidden {
        for i in 0..r.input {
            let flat = offset(r.w[0]) + o * r.input + i;
            compare(flat, unit_loss(o, h * a[i], h * b[i]), unit_loss(o, -h * a[i], -h * b[i]));
        }
        compare(offset(r.b[0]) + o, unit_loss(o, h, h), unit_loss(o, -h, -h));
    }
    worst
}

/// Two blocks of sizes `sizes` with 1 inside blocks and 0 across.
pub fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect()
}
