//! Convolution, upsampling and the fixed window filter.
//!
//! Layout: activations are NHWC, weights are (kh, kw, c_in, c_out) so the
//! innermost loops run over the contiguous output-channel axis. Padding is
//! SAME: output spatial dims are ceil(in/stride) with the pad split
//! begin-floor/end-ceil. Kernels are serial with a pixel-blocked interior
//! fast path; summation order is fixed, so results are bit-stable.

use super::{make_op, Scalar, Shape, Tensor};

/// Output pixels processed together in the interior fast path; amortises
/// weight-row loads across neighbouring pixels.
const PIXEL_BLOCK: usize = 4;

/// `out[i] += k * row[i]` in fixed 8-wide chunks. The constant chunk width
/// gives the vectorizer a known trip count, which runtime channel counts
/// would otherwise hide.
#[inline(always)]
fn fma_row<S: Scalar>(out: &mut [S], row: &[S], k: S) {
    let mut oc = out.chunks_exact_mut(8);
    let mut rc = row.chunks_exact(8);
    for (o8, r8) in (&mut oc).zip(&mut rc) {
        let o8: &mut [S; 8] = o8.try_into().expect("chunk width");
        let r8: &[S; 8] = r8.try_into().expect("chunk width");
        for i in 0..8 {
            o8[i] = o8[i] + k * r8[i];
        }
    }
    for (o, &r) in oc.into_remainder().iter_mut().zip(rc.remainder()) {
        *o = *o + k * r;
    }
}

fn same_pad(input: usize, k: usize, stride: usize) -> (usize, usize, usize) {
    let out = input.div_ceil(stride);
    let total = ((out - 1) * stride + k).saturating_sub(input);
    (out, total / 2, total - total / 2)
}

/// 2D cross-correlation with SAME zero padding.
///
/// * `x`: (n, h, w, c_in)
/// * `w`: (kh, kw, c_in, c_out)
/// * `b`: (1, 1, 1, c_out)
/// * `stride`: 1 or 2
pub fn conv2d<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>, stride: usize) -> Tensor<S> {
    let xs = x.shape();
    let ws = w.shape();
    let (kh, kw, cin, cout) = (ws.n, ws.h, ws.w, ws.c);
    assert!(stride == 1 || stride == 2, "conv2d stride must be 1 or 2");
    assert_eq!(xs.c, cin, "conv2d: input has {} channels, weights expect {cin}", xs.c);
    assert_eq!(b.shape().len(), cout, "conv2d: bias length must equal c_out");

    let (oh, ph, _) = same_pad(xs.h, kh, stride);
    let (ow, pw, _) = same_pad(xs.w, kw, stride);
    let out_shape = Shape::new(xs.n, oh, ow, cout);

    let data = {
        let xd = x.data();
        let wd = w.data();
        let bd = b.data();
        conv_forward(&xd, xs, &wd, (kh, kw, cin, cout), &bd, stride, (oh, ph), (ow, pw))
    };

    make_op(
        out_shape,
        data,
        vec![x.clone(), w.clone(), b.clone()],
        Box::new(move |g, _, parents| {
            let (x, w, b) = (&parents[0], &parents[1], &parents[2]);
            let xs = x.shape();
            if b.requires_grad() {
                b.accumulate_grad(|acc| {
                    for px in g.chunks_exact(cout) {
                        for (a, &gv) in acc.iter_mut().zip(px) {
                            *a += gv;
                        }
                    }
                });
            }
            if w.requires_grad() {
                let xd = x.data();
                let partial = conv_dw(&xd, xs, g, (kh, kw, cin, cout), stride, (oh, ph), (ow, pw));
                w.accumulate_grad(|acc| {
                    for (a, p) in acc.iter_mut().zip(&partial) {
                        *a += *p;
                    }
                });
            }
            if x.requires_grad() {
                let wd = w.data();
                let partial = conv_dx(&wd, xs, g, (kh, kw, cin, cout), stride, (oh, ph), (ow, pw));
                x.accumulate_grad(|acc| {
                    for (a, p) in acc.iter_mut().zip(&partial) {
                        *a += *p;
                    }
                });
            }
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn conv_forward<S: Scalar>(
    xd: &[S],
    xs: Shape,
    wd: &[S],
    (kh, kw, cin, cout): (usize, usize, usize, usize),
    bd: &[S],
    stride: usize,
    (oh, ph): (usize, usize),
    (ow, pw): (usize, usize),
) -> Vec<S> {
    // the 3x3 stride-1 SAME case dominates the pipeline's FLOPs; compile it
    // with constant kernel dims so the tap loops unroll
    if kh == 3 && kw == 3 && stride == 1 && ph == 1 && pw == 1 {
        return conv_forward_k3s1(xd, xs, wd, (cin, cout), bd, oh, ow);
    }
    conv_forward_general(xd, xs, wd, (kh, kw, cin, cout), bd, stride, (oh, ph), (ow, pw))
}

// Edge handling lives in nested fns, not closures: a capturing closure here
// defeats the aliasing analysis and halves the interior loop's throughput.
#[allow(clippy::too_many_arguments)]
#[inline]
fn fwd_edge_pixel_k3s1<S: Scalar>(
    out_pix: &mut [S],
    n: usize,
    oy: usize,
    ox: usize,
    xd: &[S],
    wd: &[S],
    bd: &[S],
    xs: Shape,
    cin: usize,
    cout: usize,
) {
    out_pix.copy_from_slice(bd);
    for ky in 0..3usize {
        let iy = (oy + ky).wrapping_sub(1);
        if iy >= xs.h {
            continue;
        }
        for kx in 0..3usize {
            let ix = (ox + kx).wrapping_sub(1);
            if ix >= xs.w {
                continue;
            }
            let xbase = ((n * xs.h + iy) * xs.w + ix) * cin;
            let wbase = (ky * 3 + kx) * cin * cout;
            for ci in 0..cin {
                let xv = xd[xbase + ci];
                let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                fma_row(out_pix, wrow, xv);
            }
        }
    }
}

#[inline(never)]
fn conv_forward_k3s1<S: Scalar>(
    xd: &[S],
    xs: Shape,
    wd: &[S],
    (cin, cout): (usize, usize),
    bd: &[S],
    oh: usize,
    ow: usize,
) -> Vec<S> {
    let mut out = vec![S::zero(); xs.n * oh * ow * cout];
    for n in 0..xs.n {
        for oy in 0..oh {
            let orow = &mut out[((n * oh + oy) * ow) * cout..((n * oh + oy + 1) * ow) * cout];
            if oy == 0 || oy + 1 >= oh || ow < 4 {
                for ox in 0..ow {
                    fwd_edge_pixel_k3s1(
                        &mut orow[ox * cout..(ox + 1) * cout],
                        n,
                        oy,
                        ox,
                        xd,
                        wd,
                        bd,
                        xs,
                        cin,
                        cout,
                    );
                }
                continue;
            }
            fwd_edge_pixel_k3s1(&mut orow[..cout], n, oy, 0, xd, wd, bd, xs, cin, cout);
            fwd_edge_pixel_k3s1(
                &mut orow[(ow - 1) * cout..],
                n,
                oy,
                ow - 1,
                xd,
                wd,
                bd,
                xs,
                cin,
                cout,
            );
            let mut ox0 = 1;
            while ox0 < ow - 1 {
                let nb = PIXEL_BLOCK.min(ow - 1 - ox0);
                let oblk = &mut orow[ox0 * cout..(ox0 + nb) * cout];
                for px in 0..nb {
                    oblk[px * cout..(px + 1) * cout].copy_from_slice(bd);
                }
                for ky in 0..3usize {
                    let iy = oy + ky - 1;
                    let xrow = (n * xs.h + iy) * xs.w * cin;
                    for kx in 0..3usize {
                        let wbase = (ky * 3 + kx) * cin * cout;
                        for ci in 0..cin {
                            let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                            for px in 0..nb {
                                let ix = ox0 + px + kx - 1;
                                let xv = xd[xrow + ix * cin + ci];
                                fma_row(&mut oblk[px * cout..(px + 1) * cout], wrow, xv);
                            }
                        }
                    }
                }
                ox0 += nb;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
#[inline(never)]
fn conv_forward_general<S: Scalar>(
    xd: &[S],
    xs: Shape,
    wd: &[S],
    (kh, kw, cin, cout): (usize, usize, usize, usize),
    bd: &[S],
    stride: usize,
    (oh, ph): (usize, usize),
    (ow, pw): (usize, usize),
) -> Vec<S> {
    let mut out = vec![S::zero(); xs.n * oh * ow * cout];
    for n in 0..xs.n {
        for oy in 0..oh {
            let orow = &mut out[((n * oh + oy) * ow) * cout..((n * oh + oy + 1) * ow) * cout];
            for ox in 0..ow {
                fwd_pixel_general(
                    &mut orow[ox * cout..(ox + 1) * cout],
                    n,
                    oy,
                    ox,
                    xd,
                    wd,
                    bd,
                    xs,
                    (kh, kw, cin, cout),
                    stride,
                    (ph, pw),
                );
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn fwd_pixel_general<S: Scalar>(
    out_pix: &mut [S],
    n: usize,
    oy: usize,
    ox: usize,
    xd: &[S],
    wd: &[S],
    bd: &[S],
    xs: Shape,
    (kh, kw, cin, cout): (usize, usize, usize, usize),
    stride: usize,
    (ph, pw): (usize, usize),
) {
    out_pix.copy_from_slice(bd);
    for ky in 0..kh {
        let iy = (oy * stride + ky) as isize - ph as isize;
        if iy < 0 || iy >= xs.h as isize {
            continue;
        }
        let iy = iy as usize;
        for kx in 0..kw {
            let ix = (ox * stride + kx) as isize - pw as isize;
            if ix < 0 || ix >= xs.w as isize {
                continue;
            }
            let ix = ix as usize;
            let xbase = ((n * xs.h + iy) * xs.w + ix) * cin;
            let wbase = (ky * kw + kx) * cin * cout;
            for ci in 0..cin {
                let xv = xd[xbase + ci];
                let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                fma_row(out_pix, wrow, xv);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_dw<S: Scalar>(
    xd: &[S],
    xs: Shape,
    g: &[S],
    (kh, kw, cin, cout): (usize, usize, usize, usize),
    stride: usize,
    (oh, ph): (usize, usize),
    (ow, pw): (usize, usize),
) -> Vec<S> {
    if kh == 3 && kw == 3 && stride == 1 && ph == 1 && pw == 1 {
        return conv_dw_k3s1(xd, xs, g, (cin, cout), oh, ow);
    }
    let mut dw = vec![S::zero(); kh * kw * cin * cout];
    for n in 0..xs.n {
        for oy in 0..oh {
            for ky in 0..kh {
                let iy = (oy * stride + ky) as isize - ph as isize;
                if iy < 0 || iy >= xs.h as isize {
                    continue;
                }
                let iy = iy as usize;
                for ox in 0..ow {
                    let gpix = &g[((n * oh + oy) * ow + ox) * cout..][..cout];
                    for kx in 0..kw {
                        let ix = (ox * stride + kx) as isize - pw as isize;
                        if ix < 0 || ix >= xs.w as isize {
                            continue;
                        }
                        let ix = ix as usize;
                        let xbase = ((n * xs.h + iy) * xs.w + ix) * cin;
                        let wbase = (ky * kw + kx) * cin * cout;
                        for ci in 0..cin {
                            let xv = xd[xbase + ci];
                            fma_row(&mut dw[wbase + ci * cout..wbase + (ci + 1) * cout], gpix, xv);
                        }
                    }
                }
            }
        }
    }
    dw
}

#[inline(never)]
fn conv_dw_k3s1<S: Scalar>(
    xd: &[S],
    xs: Shape,
    g: &[S],
    (cin, cout): (usize, usize),
    oh: usize,
    ow: usize,
) -> Vec<S> {
    let mut dw = vec![S::zero(); 9 * cin * cout];
    for n in 0..xs.n {
        for oy in 0..oh {
            for ky in 0..3usize {
                let iy = (oy + ky).wrapping_sub(1);
                if iy >= xs.h {
                    continue;
                }
                let xrow = (n * xs.h + iy) * xs.w * cin;
                let grow = (n * oh + oy) * ow * cout;
                for ox in 0..ow {
                    let gpix = &g[grow + ox * cout..grow + (ox + 1) * cout];
                    for kx in 0..3usize {
                        let ix = (ox + kx).wrapping_sub(1);
                        if ix >= xs.w {
                            continue;
                        }
                        let xbase = xrow + ix * cin;
                        let wbase = (ky * 3 + kx) * cin * cout;
                        for ci in 0..cin {
                            let xv = xd[xbase + ci];
                            fma_row(&mut dw[wbase + ci * cout..wbase + (ci + 1) * cout], gpix, xv);
                        }
                    }
                }
            }
        }
    }
    dw
}

#[allow(clippy::too_many_arguments)]
fn conv_dx<S: Scalar>(
    wd: &[S],
    xs: Shape,
    g: &[S],
    (kh, kw, cin, cout): (usize, usize, usize, usize),
    stride: usize,
    (oh, ph): (usize, usize),
    (ow, pw): (usize, usize),
) -> Vec<S> {
    // transpose weights to (kh, kw, c_out, c_in) so the inner loop is an
    // FMA broadcast over the contiguous input-channel axis
    let mut wt = vec![S::zero(); wd.len()];
    for k in 0..kh * kw {
        for ci in 0..cin {
            for co in 0..cout {
                wt[(k * cout + co) * cin + ci] = wd[(k * cin + ci) * cout + co];
            }
        }
    }
    if kh == 3 && kw == 3 && stride == 1 && ph == 1 && pw == 1 {
        return conv_dx_k3s1(&wt, xs, g, (cin, cout), oh, ow);
    }
    let mut dx = vec![S::zero(); xs.len()];
    for n in 0..xs.n {
        for iy in 0..xs.h {
            let drow = &mut dx[((n * xs.h + iy) * xs.w) * cin..((n * xs.h + iy + 1) * xs.w) * cin];
            for ky in 0..kh {
                let t = iy as isize + ph as isize - ky as isize;
                if t < 0 || t % stride as isize != 0 {
                    continue;
                }
                let oy = (t / stride as isize) as usize;
                if oy >= oh {
                    continue;
                }
                for ix in 0..xs.w {
                    let dpix = &mut drow[ix * cin..(ix + 1) * cin];
                    for kx in 0..kw {
                        let u = ix as isize + pw as isize - kx as isize;
                        if u < 0 || u % stride as isize != 0 {
                            continue;
                        }
                        let ox = (u / stride as isize) as usize;
                        if ox >= ow {
                            continue;
                        }
                        let gpix = &g[((n * oh + oy) * ow + ox) * cout..][..cout];
                        let wbase = (ky * kw + kx) * cout * cin;
                        for (co, &gv) in gpix.iter().enumerate() {
                            let wrow = &wt[wbase + co * cin..wbase + (co + 1) * cin];
                            fma_row(dpix, wrow, gv);
                        }
                    }
                }
            }
        }
    }
    dx
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn dx_edge_pixel_k3s1<S: Scalar>(
    dpix: &mut [S],
    n: usize,
    iy: usize,
    ix: usize,
    wt: &[S],
    g: &[S],
    (cin, cout): (usize, usize),
    oh: usize,
    ow: usize,
) {
    for ky in 0..3usize {
        let oy = (iy + 1).wrapping_sub(ky);
        if oy >= oh {
            continue;
        }
        for kx in 0..3usize {
            let ox = (ix + 1).wrapping_sub(kx);
            if ox >= ow {
                continue;
            }
            let gpix = &g[((n * oh + oy) * ow + ox) * cout..][..cout];
            let wbase = (ky * 3 + kx) * cout * cin;
            for (co, &gv) in gpix.iter().enumerate() {
                let wrow = &wt[wbase + co * cin..wbase + (co + 1) * cin];
                fma_row(dpix, wrow, gv);
            }
        }
    }
}

/// `wt` is the (kh, kw, c_out, c_in) transposed weight layout.
#[inline(never)]
fn conv_dx_k3s1<S: Scalar>(
    wt: &[S],
    xs: Shape,
    g: &[S],
    (cin, cout): (usize, usize),
    oh: usize,
    ow: usize,
) -> Vec<S> {
    let mut dx = vec![S::zero(); xs.len()];
    for n in 0..xs.n {
        for iy in 0..xs.h {
            let drow = &mut dx[((n * xs.h + iy) * xs.w) * cin..((n * xs.h + iy + 1) * xs.w) * cin];
            if iy == 0 || iy + 1 >= xs.h || xs.w < 4 {
                for ix in 0..xs.w {
                    dx_edge_pixel_k3s1(
                        &mut drow[ix * cin..(ix + 1) * cin],
                        n,
                        iy,
                        ix,
                        wt,
                        g,
                        (cin, cout),
                        oh,
                        ow,
                    );
                }
                continue;
            }
            dx_edge_pixel_k3s1(&mut drow[..cin], n, iy, 0, wt, g, (cin, cout), oh, ow);
            dx_edge_pixel_k3s1(
                &mut drow[(xs.w - 1) * cin..],
                n,
                iy,
                xs.w - 1,
                wt,
                g,
                (cin, cout),
                oh,
                ow,
            );
            let mut ix0 = 1;
            while ix0 < xs.w - 1 {
                let nb = PIXEL_BLOCK.min(xs.w - 1 - ix0);
                let dblk = &mut drow[ix0 * cin..(ix0 + nb) * cin];
                for ky in 0..3usize {
                    let oy = iy + 1 - ky;
                    let grow = (n * oh + oy) * ow * cout;
                    for kx in 0..3usize {
                        let wbase = (ky * 3 + kx) * cout * cin;
                        for co in 0..cout {
                            let wrow = &wt[wbase + co * cin..wbase + (co + 1) * cin];
                            for px in 0..nb {
                                let ox = ix0 + px + 1 - kx;
                                let gv = g[grow + ox * cout + co];
                                fma_row(&mut dblk[px * cin..(px + 1) * cin], wrow, gv);
                            }
                        }
                    }
                }
                ix0 += nb;
            }
        }
    }
    dx
}

/// Nearest-neighbour 2x upsample.
pub fn nn_upsample2<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let s = x.shape();
    let out_shape = Shape::new(s.n, s.h * 2, s.w * 2, s.c);
    let mut data = vec![S::zero(); out_shape.len()];
    {
        let xd = x.data();
        for n in 0..s.n {
            for y in 0..s.h * 2 {
                for xx in 0..s.w * 2 {
                    let src = ((n * s.h + y / 2) * s.w + xx / 2) * s.c;
                    let dst = ((n * s.h * 2 + y) * s.w * 2 + xx) * s.c;
                    data[dst..dst + s.c].copy_from_slice(&xd[src..src + s.c]);
                }
            }
        }
    }
    make_op(
        out_shape,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for y in 0..s.h * 2 {
                            for xx in 0..s.w * 2 {
                                let src = ((n * s.h + y / 2) * s.w + xx / 2) * s.c;
                                let dst = ((n * s.h * 2 + y) * s.w * 2 + xx) * s.c;
                                for c in 0..s.c {
                                    acc[src + c] += g[dst + c];
                                }
                            }
                        }
                    }
                });
            }
        }),
    )
}

/// Resize convolution: nearest-neighbour 2x upsample followed by a stride-1
/// SAME convolution. The standard checkerboard-free upsampling layer.
pub fn resize_conv<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    conv2d(&nn_upsample2(x), w, b, 1)
}

/// Depthwise VALID correlation with one fixed (non-learnable) k x k kernel
/// applied to every channel; the SSIM local-statistics window.
pub fn window_filter<S: Scalar>(x: &Tensor<S>, kernel: &[S], k: usize) -> Tensor<S> {
    assert_eq!(kernel.len(), k * k, "window_filter kernel must be k*k");
    let s = x.shape();
    assert!(
        s.h >= k && s.w >= k,
        "window_filter: image {}x{} smaller than window {k}",
        s.h,
        s.w
    );
    let (oh, ow) = (s.h - k + 1, s.w - k + 1);
    let out_shape = Shape::new(s.n, oh, ow, s.c);
    let kernel_v = kernel.to_vec();
    let mut data = vec![S::zero(); out_shape.len()];
    {
        let xd = x.data();
        for n in 0..s.n {
            for oy in 0..oh {
                for ox in 0..ow {
                    let dst = ((n * oh + oy) * ow + ox) * s.c;
                    for ky in 0..k {
                        for kx in 0..k {
                            let kv = kernel_v[ky * k + kx];
                            let src = ((n * s.h + oy + ky) * s.w + ox + kx) * s.c;
                            for c in 0..s.c {
                                data[dst + c] = data[dst + c] + kv * xd[src + c];
                            }
                        }
                    }
                }
            }
        }
    }
    make_op(
        out_shape,
        data,
        vec![x.clone()],
        Box::new(move |g, _, parents| {
            let p = &parents[0];
            if p.requires_grad() {
                p.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let src = ((n * oh + oy) * ow + ox) * s.c;
                                for ky in 0..k {
                                    for kx in 0..k {
                                        let kv = kernel_v[ky * k + kx];
                                        let dst = ((n * s.h + oy + ky) * s.w + ox + kx) * s.c;
                                        for c in 0..s.c {
                                            acc[dst + c] += kv * g[src + c];
                                        }
                                    }
                                }
                            }
                        }
                    }
                });
            }
        }),
    )
}
