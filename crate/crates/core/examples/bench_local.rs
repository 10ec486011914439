use std::time::Instant;
use visnir::autodiff::{conv2d, Scalar, Shape, Tensor};

const PIXEL_BLOCK: usize = 4;
include!("/tmp/kernel_cur.rs");

fn main() {
    let (h, w, cin, cout) = (64usize, 64usize, 32usize, 32usize);
    let xs = Shape::new(1, h, w, cin);
    let xd = vec![0.1f32; h * w * cin];
    let wd = vec![0.01f32; 9 * cin * cout];
    let bd = vec![0.0f32; cout];
    let macs = (h * w * 9 * cin * cout) as f64;
    let n = 50;
    let mut out = conv_forward_k3s1(&xd, xs, &wd, (cin, cout), &bd, h, w);
    let t0 = Instant::now();
    for _ in 0..n {
        out = conv_forward_k3s1(&xd, xs, &wd, (cin, cout), &bd, h, w);
        std::hint::black_box(&out);
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("current engine kernel, local: {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);

    // defeat allocator block reuse: keep every output alive
    let mut keep = Vec::new();
    let t0 = Instant::now();
    for _ in 0..n {
        let o = conv_forward_k3s1(&xd, xs, &wd, (cin, cout), &bd, h, w);
        keep.push(o);
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    std::hint::black_box(&keep);
    println!("local, no buffer reuse: {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);

    // the lib's public op on constant tensors, same process
    let xc = Tensor::<f32>::constant(xs, xd.clone());
    let wc = Tensor::<f32>::constant(Shape::new(3, 3, cin, cout), wd.clone());
    let bc = Tensor::<f32>::constant(Shape::new(1, 1, 1, cout), bd.clone());
    let t0 = Instant::now();
    for _ in 0..n {
        let y = conv2d(&xc, &wc, &bc, 1);
        std::hint::black_box(y.item());
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("lib conv2d const, same process: {:.2} ms {:.2} GFLOP/s", dt * 1e3, 2.0 * macs / dt / 1e9);
}
