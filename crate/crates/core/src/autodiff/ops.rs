//! Elementwise, reduction and channel-shape operations.

use super::{make_op, Scalar, Shape, Tensor};

fn assert_same_shape<S: Scalar>(op: &str, a: &Tensor<S>, b: &Tensor<S>) {
    assert_eq!(
        a.shape(),
        b.shape(),
        "{op}: shape mismatch {} vs {}",
        a.shape(),
        b.shape()
    );
}

/// Elementwise unary op; `df(x, y)` is the local derivative given input and
/// output values.
fn unary<S: Scalar>(
    x: &Tensor<S>,
    f: impl Fn(S) -> S,
    df: impl Fn(S, S) -> S + 'static,
) -> Tensor<S> {
    let data: Vec<S> = x.data().iter().map(|&v| f(v)).collect();
    let shape = x.shape();
    make_op(
        shape,
        data,
        vec![x.clone()],
        Box::new(move |g, y, parents| {
            let p = &parents[0];
            if !p.requires_grad() {
                return;
            }
            let xd = p.data();
            p.accumulate_grad(|acc| {
                for i in 0..acc.len() {
                    acc[i] += g[i] * df(xd[i], y[i]);
                }
            });
        }),
    )
}

pub fn add<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    assert_same_shape("add", a, b);
    let data: Vec<S> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x + y).collect();
    make_op(
        a.shape(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g, _, parents| {
            for p in parents {
                if p.requires_grad() {
                    p.accumulate_grad(|acc| {
                        for i in 0..acc.len() {
                            acc[i] += g[i];
                        }
                    });
                }
            }
        }),
    )
}

pub fn sub<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    assert_same_shape("sub", a, b);
    let data: Vec<S> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x - y).collect();
    make_op(
        a.shape(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g, _, parents| {
            if parents[0].requires_grad() {
                parents[0].accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] += g[i];
                    }
                });
            }
            if parents[1].requires_grad() {
                parents[1].accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] -= g[i];
                    }
                });
            }
        }),
    )
}

pub fn mul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    assert_same_shape("mul", a, b);
    let data: Vec<S> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x * y).collect();
    make_op(
        a.shape(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g, _, parents| {
            let (a, b) = (&parents[0], &parents[1]);
            if a.requires_grad() {
                let bd = b.data();
                a.accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] += g[i] * bd[i];
                    }
                });
            }
            if b.requires_grad() {
                let ad = a.data();
                b.accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] += g[i] * ad[i];
                    }
                });
            }
        }),
    )
}

pub fn div<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    assert_same_shape("div", a, b);
    let data: Vec<S> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x / y).collect();
    make_op(
        a.shape(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g, _, parents| {
            let (a, b) = (&parents[0], &parents[1]);
            let bd = b.data();
            if a.requires_grad() {
                a.accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] += g[i] / bd[i];
                    }
                });
            }
            if b.requires_grad() {
                let ad = a.data();
                b.accumulate_grad(|acc| {
                    for i in 0..acc.len() {
                        acc[i] -= g[i] * ad[i] / (bd[i] * bd[i]);
                    }
                });
            }
        }),
    )
}

pub fn add_scalar<S: Scalar>(x: &Tensor<S>, s: f64) -> Tensor<S> {
    let s = S::from_f64(s);
    unary(x, move |v| v + s, |_, _| S::one())
}

pub fn mul_scalar<S: Scalar>(x: &Tensor<S>, s: f64) -> Tensor<S> {
    let s = S::from_f64(s);
    unary(x, move |v| v * s, move |_, _| s)
}

pub fn neg<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(x, |v| -v, |_, _| -S::one())
}

/// |x| with subgradient 0 at the kink.
pub fn abs<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(
        x,
        |v| v.abs(),
        |v, _| {
            if v > S::zero() {
                S::one()
            } else if v < S::zero() {
                -S::one()
            } else {
                S::zero()
            }
        },
    )
}

pub fn exp<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(x, |v| v.exp(), |_, y| y)
}

pub fn sigmoid<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(
        x,
        |v| S::one() / (S::one() + (-v).exp()),
        |_, y| y * (S::one() - y),
    )
}

pub fn tanh<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(x, |v| v.tanh(), |_, y| S::one() - y * y)
}

pub fn relu<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    unary(
        x,
        |v| v.max(S::zero()),
        |v, _| if v > S::zero() { S::one() } else { S::zero() },
    )
}

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

pub fn leaky_relu<S: Scalar>(x: &Tensor<S>, slope: f64) -> Tensor<S> {
    let slope = S::from_f64(slope);
    unary(
        x,
        move |v| if v > S::zero() { v } else { v * slope },
        move |v, _| if v > S::zero() { S::one() } else { slope },
    )
}

/// clamp(x, lo, hi); gradient passes through strictly inside the interval.
pub fn clamp<S: Scalar>(x: &Tensor<S>, lo: f64, hi: f64) -> Tensor<S> {
    let lo = S::from_f64(lo);
    let hi = S::from_f64(hi);
    unary(
        x,
        move |v| v.min(hi).max(lo),
        move |v, _| {
            if v > lo && v < hi {
                S::one()
            } else {
                S::zero()
            }
        },
    )
}

pub fn sum<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let total: S = x.data().iter().copied().sum();
    make_op(
        Shape::scalar(),
        vec![total],
        vec![x.clone()],
        Box::new(|g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for a in acc.iter_mut() {
                        *a += g[0];
                    }
                });
            }
        }),
    )
}

pub fn mean<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let n = S::from_f64(x.shape().len() as f64);
    let total: S = x.data().iter().copied().sum();
    make_op(
        Shape::scalar(),
        vec![total / n],
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                let scale = g[0] / n;
                p.accumulate_grad(|acc| {
                    for a in acc.iter_mut() {
                        *a += scale;
                    }
                });
            }
        }),
    )
}

/// Concatenate along the channel axis; gradients route back to each half.
pub fn concat_channels<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    let (sa, sb) = (a.shape(), b.shape());
    assert!(
        sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
        "concat_channels: spatial shapes differ: {sa} vs {sb}"
    );
    let shape = Shape::new(sa.n, sa.h, sa.w, sa.c + sb.c);
    let mut data = Vec::with_capacity(shape.len());
    {
        let ad = a.data();
        let bd = b.data();
        for px in 0..sa.n * sa.h * sa.w {
            data.extend_from_slice(&ad[px * sa.c..(px + 1) * sa.c]);
            data.extend_from_slice(&bd[px * sb.c..(px + 1) * sb.c]);
        }
    }
    let (ca, cb) = (sa.c, sb.c);
    make_op(
        shape,
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g, _, parents| {
            let c = ca + cb;
            let pixels = g.len() / c;
            if parents[0].requires_grad() {
                parents[0].accumulate_grad(|acc| {
                    for px in 0..pixels {
                        for i in 0..ca {
                            acc[px * ca + i] += g[px * c + i];
                        }
                    }
                });
            }
            if parents[1].requires_grad() {
                parents[1].accumulate_grad(|acc| {
                    for px in 0..pixels {
                        for i in 0..cb {
                            acc[px * cb + i] += g[px * c + ca + i];
                        }
                    }
                });
            }
        }),
    )
}

/// Channels `[start, end)` of `x`.
pub fn slice_channels<S: Scalar>(x: &Tensor<S>, start: usize, end: usize) -> Tensor<S> {
    let s = x.shape();
    assert!(start < end && end <= s.c, "slice_channels: bad range {start}..{end} of {}", s.c);
    let cs = end - start;
    let shape = Shape::new(s.n, s.h, s.w, cs);
    let mut data = Vec::with_capacity(shape.len());
    {
        let xd = x.data();
        for px in 0..s.n * s.h * s.w {
            data.extend_from_slice(&xd[px * s.c + start..px * s.c + end]);
        }
    }
    let c = s.c;
    make_op(
        shape,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                let pixels = g.len() / cs;
                p.accumulate_grad(|acc| {
                    for px in 0..pixels {
                        for i in 0..cs {
                            acc[px * c + start + i] += g[px * cs + i];
                        }
                    }
                });
            }
        }),
    )
}

/// Replicate a single channel across `c` channels.
pub fn broadcast_channels<S: Scalar>(x: &Tensor<S>, c: usize) -> Tensor<S> {
    let s = x.shape();
    assert_eq!(s.c, 1, "broadcast_channels requires a single-channel input");
    let shape = Shape::new(s.n, s.h, s.w, c);
    let mut data = Vec::with_capacity(shape.len());
    {
        let xd = x.data();
        for &v in xd.iter() {
            for _ in 0..c {
                data.push(v);
            }
        }
    }
    make_op(
        shape,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for (px, a) in acc.iter_mut().enumerate() {
                        for i in 0..c {
                            *a += g[px * c + i];
                        }
                    }
                });
            }
        }),
    )
}

/// Per-pixel mean over channels, producing one channel.
pub fn mean_channels<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    let c = s.c;
    let inv = S::from_f64(1.0 / c as f64);
    let shape = Shape::new(s.n, s.h, s.w, 1);
    let data: Vec<S> = x
        .data()
        .chunks_exact(c)
        .map(|px| px.iter().copied().sum::<S>() * inv)
        .collect();
    make_op(
        shape,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for px in 0..g.len() {
                        let gv = g[px] * inv;
                        for i in 0..c {
                            acc[px * c + i] += gv;
                        }
                    }
                });
            }
        }),
    )
}

/// Forward difference along the width axis with replicated boundary: the
/// last column is zero.
pub fn dx_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    let mut data = vec![S::zero(); s.len()];
    {
        let xd = x.data();
        for n in 0..s.n {
            for y in 0..s.h {
                for xx in 0..s.w.saturating_sub(1) {
                    let i = ((n * s.h + y) * s.w + xx) * s.c;
                    for c in 0..s.c {
                        data[i + c] = xd[i + s.c + c] - xd[i + c];
                    }
                }
            }
        }
    }
    make_op(
        s,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for y in 0..s.h {
                            for xx in 0..s.w.saturating_sub(1) {
                                let i = ((n * s.h + y) * s.w + xx) * s.c;
                                for c in 0..s.c {
                                    acc[i + s.c + c] += g[i + c];
                                    acc[i + c] -= g[i + c];
                                }
                            }
                        }
                    }
                });
            }
        }),
    )
}

/// Forward difference along the height axis; the last row is zero.
pub fn dy_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    let mut data = vec![S::zero(); s.len()];
    {
        let xd = x.data();
        let row = s.w * s.c;
        for n in 0..s.n {
            for y in 0..s.h.saturating_sub(1) {
                let i = (n * s.h + y) * row;
                for j in 0..row {
                    data[i + j] = xd[i + row + j] - xd[i + j];
                }
            }
        }
    }
    make_op(
        s,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                let row = s.w * s.c;
                p.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for y in 0..s.h.saturating_sub(1) {
                            let i = (n * s.h + y) * row;
                            for j in 0..row {
                                acc[i + row + j] += g[i + j];
                                acc[i + j] -= g[i + j];
                            }
                        }
                    }
                });
            }
        }),
    )
}
