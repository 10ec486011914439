use std::time::Instant;

// current kernel style: for ci { broadcast x; for co { out += x*w } }
fn conv_a(xd: &[f32], wd: &[f32], bd: &[f32], h: usize, w: usize, cin: usize, cout: usize, out: &mut [f32]) {
    for oy in 0..h {
        for ox in 0..w {
            let opix = &mut out[(oy * w + ox) * cout..(oy * w + ox + 1) * cout];
            opix.copy_from_slice(bd);
            for ky in 0..3usize {
                let iy = (oy + ky).wrapping_sub(1);
                if iy >= h { continue; }
                for kx in 0..3usize {
                    let ix = (ox + kx).wrapping_sub(1);
                    if ix >= w { continue; }
                    let xbase = (iy * w + ix) * cin;
                    let wbase = (ky * 3 + kx) * cin * cout;
                    for ci in 0..cin {
                        let xv = xd[xbase + ci];
                        let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                        for (o, &wv) in opix.iter_mut().zip(wrow) {
                            *o += xv * wv;
                        }
                    }
                }
            }
        }
    }
}

// blocked: process 4 output pixels at once so w rows are reused from registers/L1
fn conv_b(xd: &[f32], wd: &[f32], bd: &[f32], h: usize, w: usize, cin: usize, cout: usize, out: &mut [f32]) {
    let bw = 4usize;
    for oy in 0..h {
        let mut ox0 = 0;
        while ox0 < w {
            let nb = bw.min(w - ox0);
            // interior fast path: all taps in-bounds for the whole block
            let interior = oy >= 1 && oy + 1 < h && ox0 >= 1 && ox0 + nb < w;
            let obase = (oy * w + ox0) * cout;
            let (pre, rest) = out.split_at_mut(obase);
            let _ = pre;
            let oblk = &mut rest[..nb * cout];
            for px in 0..nb { oblk[px*cout..(px+1)*cout].copy_from_slice(bd); }
            if interior {
                for ky in 0..3usize {
                    let iy = oy + ky - 1;
                    for kx in 0..3usize {
                        let wbase = (ky * 3 + kx) * cin * cout;
                        for ci in 0..cin {
                            let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                            for px in 0..nb {
                                let ix = ox0 + px + kx - 1;
                                let xv = xd[(iy * w + ix) * cin + ci];
                                let opix = &mut oblk[px * cout..(px + 1) * cout];
                                for (o, &wv) in opix.iter_mut().zip(wrow) {
                                    *o += xv * wv;
                                }
                            }
                        }
                    }
                }
            } else {
                for px in 0..nb {
                    let ox = ox0 + px;
                    let opix = &mut oblk[px * cout..(px + 1) * cout];
                    for ky in 0..3usize {
                        let iy = (oy + ky).wrapping_sub(1);
                        if iy >= h { continue; }
                        for kx in 0..3usize {
                            let ix = (ox + kx).wrapping_sub(1);
                            if ix >= w { continue; }
                            let xbase = (iy * w + ix) * cin;
                            let wbase = (ky * 3 + kx) * cin * cout;
                            for ci in 0..cin {
                                let xv = xd[xbase + ci];
                                let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                                for (o, &wv) in opix.iter_mut().zip(wrow) {
                                    *o += xv * wv;
                                }
                            }
                        }
                    }
                }
            }
            ox0 += nb;
        }
    }
}

fn main() {
    let (h, w, cin, cout) = (64usize, 64usize, 32usize, 32usize);
    let xd = vec![0.1f32; h * w * cin];
    let wd = vec![0.01f32; 9 * cin * cout];
    let bd = vec![0.0f32; cout];
    let mut out = vec![0.0f32; h * w * cout];
    let macs = (h * w * 9 * cin * cout) as f64;
    let n = 50;
    // warm
    conv_a(&xd, &wd, &bd, h, w, cin, cout, &mut out);
    let t0 = Instant::now();
    for _ in 0..n { conv_a(&xd, &wd, &bd, h, w, cin, cout, &mut out); std::hint::black_box(&out); }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("A (current, 1 thread): {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);
    let mut out2 = vec![0.0f32; h * w * cout];
    conv_b(&xd, &wd, &bd, h, w, cin, cout, &mut out2);
    let diff = out.iter().zip(&out2).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    println!("max diff {diff}");
    let t0 = Instant::now();
    for _ in 0..n { conv_b(&xd, &wd, &bd, h, w, cin, cout, &mut out2); std::hint::black_box(&out2); }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("B (pixel-blocked):     {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);
    let mut out3 = vec![0.0f32; h * w * cout];
    conv_g(&xd, &wd, &bd, h, w, cin, cout, &mut out3);
    let t0 = Instant::now();
    for _ in 0..n { conv_g(&xd, &wd, &bd, h, w, cin, cout, &mut out3); std::hint::black_box(&out3); }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("G (generic blocked):   {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);
    // fresh allocation per call, generic zero fill like the engine
    let t0 = Instant::now();
    for _ in 0..n {
        let mut o = alloc_zeroed_generic::<f32>(h * w * cout);
        conv_g(&xd, &wd, &bd, h, w, cin, cout, &mut o);
        std::hint::black_box(&o);
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("G + fresh alloc:       {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);
}

fn alloc_zeroed_generic<S: visnir::autodiff::Scalar>(n: usize) -> Vec<S> {
    vec![S::zero(); n]
}

// generic twin of conv_b to test monomorphization cost
fn conv_g<S: visnir::autodiff::Scalar>(xd: &[S], wd: &[S], bd: &[S], h: usize, w: usize, cin: usize, cout: usize, out: &mut [S]) {
    let bw = 4usize;
    for oy in 0..h {
        let mut ox0 = 0;
        while ox0 < w {
            let nb = bw.min(w - ox0);
            let interior = oy >= 1 && oy + 1 < h && ox0 >= 1 && ox0 + nb < w;
            let obase = (oy * w + ox0) * cout;
            let oblk = &mut out[obase..obase + nb * cout];
            for px in 0..nb { oblk[px*cout..(px+1)*cout].copy_from_slice(bd); }
            if interior {
                for ky in 0..3usize {
                    let iy = oy + ky - 1;
                    for kx in 0..3usize {
                        let wbase = (ky * 3 + kx) * cin * cout;
                        for ci in 0..cin {
                            let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                            for px in 0..nb {
                                let ix = ox0 + px + kx - 1;
                                let xv = xd[(iy * w + ix) * cin + ci];
                                let opix = &mut oblk[px * cout..(px + 1) * cout];
                                for (o, &wv) in opix.iter_mut().zip(wrow) {
                                    *o = *o + xv * wv;
                                }
                            }
                        }
                    }
                }
            } else {
                for px in 0..nb {
                    let ox = ox0 + px;
                    let opix = &mut oblk[px * cout..(px + 1) * cout];
                    for ky in 0..3usize {
                        let iy = (oy + ky).wrapping_sub(1);
                        if iy >= h { continue; }
                        for kx in 0..3usize {
                            let ix = (ox + kx).wrapping_sub(1);
                            if ix >= w { continue; }
                            let xbase = (iy * w + ix) * cin;
                            let wbase = (ky * 3 + kx) * cin * cout;
                            for ci in 0..cin {
                                let xv = xd[xbase + ci];
                                let wrow = &wd[wbase + ci * cout..wbase + (ci + 1) * cout];
                                for (o, &wv) in opix.iter_mut().zip(wrow) {
                                    *o = *o + xv * wv;
                                }
                            }
                        }
                    }
                }
            }
            ox0 += nb;
        }
    }
}
