//! In-graph colour transforms: fixed 3x3 channel mixes (YUV) and the
//! piecewise hexcone HSV pair used by the ablation harness.

use super::{make_op, Scalar, Tensor};

/// Fixed linear channel mix `y_c = sum_k m[c][k] * x_k + bias[c]` for
/// 3-channel tensors. The matrix is constant data, not a parameter.
pub fn channel_affine<S: Scalar>(x: &Tensor<S>, m: [[f64; 3]; 3], bias: [f64; 3]) -> Tensor<S> {
    let s = x.shape();
    assert_eq!(s.c, 3, "channel_affine expects 3 channels");
    let mv: [[S; 3]; 3] = m.map(|row| row.map(S::from_f64));
    let bv: [S; 3] = bias.map(S::from_f64);
    let data: Vec<S> = x
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            (0..3).map(move |c| mv[c][0] * px[0] + mv[c][1] * px[1] + mv[c][2] * px[2] + bv[c])
        })
        .collect();
    make_op(
        s,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for (apx, gpx) in acc.chunks_exact_mut(3).zip(g.chunks_exact(3)) {
                        for k in 0..3 {
                            apx[k] += mv[0][k] * gpx[0] + mv[1][k] * gpx[1] + mv[2][k] * gpx[2];
                        }
                    }
                });
            }
        }),
    )
}

fn argmax3<S: Scalar>(r: S, g: S, b: S) -> usize {
    // first-wins tie break, consistent between forward and backward
    if r >= g && r >= b {
        0
    } else if g >= b {
        1
    } else {
        2
    }
}

fn argmin3<S: Scalar>(r: S, g: S, b: S) -> usize {
    if r <= g && r <= b {
        0
    } else if g <= b {
        1
    } else {
        2
    }
}

/// Hexcone RGB -> HSV with H in [0,1). Piecewise differentiable; at ties the
/// gradient of the active branch is used.
pub fn rgb_to_hsv_t<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    assert_eq!(s.c, 3, "rgb_to_hsv expects 3 channels");
    let six = S::from_f64(6.0);
    let data: Vec<S> = x
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            let (r, g, b) = (px[0], px[1], px[2]);
            let mx = argmax3(r, g, b);
            let mn = argmin3(r, g, b);
            let v = px[mx];
            let delta = v - px[mn];
            let sat = if v > S::zero() { delta / v } else { S::zero() };
            let h = if delta <= S::zero() {
                S::zero()
            } else {
                let raw = match mx {
                    0 => {
                        let t = (g - b) / delta;
                        // rem_euclid(6)
                        let m = t % six;
                        if m < S::zero() {
                            m + six
                        } else {
                            m
                        }
                    }
                    1 => (b - r) / delta + S::from_f64(2.0),
                    _ => (r - g) / delta + S::from_f64(4.0),
                };
                raw / six
            };
            [h, sat, v]
        })
        .collect();
    make_op(
        s,
        data,
        vec![x.clone()],
        Box::new(move |g_out, _, parents| {
            let p = &parents[0];
            if !p.requires_grad() {
                return;
            }
            let xd = p.data();
            p.accumulate_grad(|acc| {
                for (px_i, (apx, gpx)) in acc.chunks_exact_mut(3).zip(g_out.chunks_exact(3)).enumerate() {
                    let base = px_i * 3;
                    let (r, g, b) = (xd[base], xd[base + 1], xd[base + 2]);
                    let mx = argmax3(r, g, b);
                    let mn = argmin3(r, g, b);
                    let v = [r, g, b][mx];
                    let delta = v - [r, g, b][mn];
                    let (gh, gs, gv) = (gpx[0], gpx[1], gpx[2]);
                    // dv/dx
                    apx[mx] += gv;
                    // ds/dx: s = (v - min)/v
                    if v > S::zero() {
                        let dmin = -S::one() / v;
                        let dmax = [r, g, b][mn] / (v * v);
                        apx[mn] += gs * dmin;
                        apx[mx] += gs * dmax;
                    }
                    // dh/dx
                    if delta > S::zero() {
                        let inv6d = S::one() / (S::from_f64(6.0) * delta);
                        let (ca, cb, num) = match mx {
                            0 => (1usize, 2usize, g - b),
                            1 => (2, 0, b - r),
                            _ => (0, 1, r - g),
                        };
                        apx[ca] += gh * inv6d;
                        apx[cb] -= gh * inv6d;
                        // d/d(delta) term: -num/(6 delta^2), delta = max - min
                        let dd = -num * inv6d / delta;
                        apx[mx] += gh * dd;
                        apx[mn] -= gh * dd;
                    }
                }
            });
        }),
    )
}

/// Hexcone HSV -> RGB, inverse of [`rgb_to_hsv_t`].
pub fn hsv_to_rgb_t<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    assert_eq!(s.c, 3, "hsv_to_rgb expects 3 channels");
    let data: Vec<S> = x
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            let (rgb, _, _) = hexcone_forward(px[0], px[1], px[2]);
            rgb
        })
        .collect();
    make_op(
        s,
        data,
        vec![x.clone()],
        Box::new(move |g_out, _, parents| {
            let p = &parents[0];
            if !p.requires_grad() {
                return;
            }
            let xd = p.data();
            p.accumulate_grad(|acc| {
                for (px_i, (apx, gpx)) in acc.chunks_exact_mut(3).zip(g_out.chunks_exact(3)).enumerate()
                {
                    let base = px_i * 3;
                    let (h, sat, v) = (xd[base], xd[base + 1], xd[base + 2]);
                    let (_, sector, f) = hexcone_forward(h, sat, v);
                    // component derivative rows: (d/dh, d/ds, d/dv) of p,q,t,v
                    let six = S::from_f64(6.0);
                    let d_p = [S::zero(), -v, S::one() - sat];
                    let d_q = [-six * v * sat, -v * f, S::one() - f * sat];
                    let d_t = [six * v * sat, -v * (S::one() - f), S::one() - (S::one() - f) * sat];
                    let d_v = [S::zero(), S::zero(), S::one()];
                    let rows: [[S; 3]; 3] = match sector {
                        0 => [d_v, d_t, d_p],
                        1 => [d_q, d_v, d_p],
                        2 => [d_p, d_v, d_t],
                        3 => [d_p, d_q, d_v],
                        4 => [d_t, d_p, d_v],
                        _ => [d_v, d_p, d_q],
                    };
                    for (row, &gc) in rows.iter().zip(gpx.iter()) {
                        for k in 0..3 {
                            apx[k] += gc * row[k];
                        }
                    }
                }
            });
        }),
    )
}

/// Shared forward: returns ((r,g,b), sector index, fractional part).
fn hexcone_forward<S: Scalar>(h: S, sat: S, v: S) -> ([S; 3], usize, S) {
    let six = S::from_f64(6.0);
    let mut h6 = (h % S::one()) * six;
    if h6 < S::zero() {
        h6 = h6 + six;
    }
    let sector = h6.floor().to_f64() as usize % 6;
    let f = h6 - h6.floor();
    let p = v * (S::one() - sat);
    let q = v * (S::one() - f * sat);
    let t = v * (S::one() - (S::one() - f) * sat);
    let rgb = match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    (rgb, sector, f)
}
