use std::time::Instant;
use visnir::autodiff::*;
use visnir::loss::*;
use visnir::nets::*;
use visnir::train::*;
use visnir::dataset::*;
use visnir::sensor::NoiseMode;

fn main() {
    // conv throughput: 64x64x32 -> 32, stride 1 (restoration block shape)
    let x = Tensor::<f32>::param(Shape::new(1, 64, 64, 32), vec![0.1; 64*64*32]);
    let w = Tensor::<f32>::param(Shape::new(3, 3, 32, 32), vec![0.01; 9*32*32]);
    let b = Tensor::<f32>::param(Shape::new(1, 1, 1, 32), vec![0.0; 32]);
    let t0 = Instant::now();
    let n = 30;
    for _ in 0..n {
        let y = conv2d(&x, &w, &b, 1);
        std::hint::black_box(y.to_vec());
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    let macs = 64.0*64.0*9.0*32.0*32.0;
    println!("conv fwd: {:.2} ms  {:.2} GFLOP/s", dt*1e3, 2.0*macs/dt/1e9);

    // same conv but as constants: no graph node, no backward closure
    let xc = Tensor::<f32>::constant(Shape::new(1, 64, 64, 32), vec![0.1; 64*64*32]);
    let wc = Tensor::<f32>::constant(Shape::new(3, 3, 32, 32), vec![0.01; 9*32*32]);
    let bc = Tensor::<f32>::constant(Shape::new(1, 1, 1, 32), vec![0.0; 32]);
    let t0 = Instant::now();
    for _ in 0..n {
        let y = conv2d(&xc, &wc, &bc, 1);
        std::hint::black_box(y.item());
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("conv fwd const: {:.2} ms  {:.2} GFLOP/s", dt*1e3, 2.0*macs/dt/1e9);

    // forward+backward of the same conv
    let t0 = Instant::now();
    for _ in 0..n {
        let y = conv2d(&x, &w, &b, 1);
        let l = mean(&y);
        backward(&l).unwrap();
        x.zero_grad(); w.zero_grad(); b.zero_grad();
    }
    let dt = t0.elapsed().as_secs_f64() / n as f64;
    println!("conv fwd+bwd: {:.2} ms  {:.2} GFLOP/s eff", dt*1e3, 3.0*2.0*macs/dt/1e9);

    // full pipeline sample loss fwd+bwd
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthesisConfig::new(2, 64, 64, 7, NoiseMode::PoissonGaussian);
    let m = synthesize_dataset(&cfg, dir.path()).unwrap();
    let s = load_sample(dir.path(), &m, 0, visnir::sensor::Phase::Night).unwrap();
    let pipe = Pipeline::<f32>::new(PipelineConfig::desk(1));
    let ext = PerceptualExtractor::new();
    let wts = LossWeights::default();
    let tog = LossToggles::default();
    // warmup
    let (l, _, _) = sample_losses(&pipe, &ext, &s, &wts, &tog).unwrap();
    backward(&l).unwrap();
    let t0 = Instant::now();
    let n = 10;
    for _ in 0..n {
        for (_, p) in pipe.params() { p.zero_grad(); }
        let (l, _, _) = sample_losses(&pipe, &ext, &s, &wts, &tog).unwrap();
        backward(&l).unwrap();
    }
    println!("sample fwd+bwd: {:.1} ms", t0.elapsed().as_secs_f64()/n as f64*1e3);

    // forward only
    let mixed = raster_to_tensor::<f32>(&s.mixed);
    let t0 = Instant::now();
    for _ in 0..n { std::hint::black_box(pipe.forward(&mixed).unwrap()); }
    println!("pipeline fwd only: {:.1} ms", t0.elapsed().as_secs_f64()/n as f64*1e3);

    // loss only (given detached outputs)
    let out = pipe.forward(&mixed).unwrap();
    let nir = out.nir_est.unwrap().detach();
    let vis = out.vis_est.unwrap().detach();
    let t0 = Instant::now();
    for _ in 0..n {
        let nir_gt = raster_to_tensor::<f32>(&s.nir);
        let vis_gt = raster_to_tensor::<f32>(&s.vis);
        let l = separation_loss(&nir, &vis, &nir_gt, &vis_gt, &mixed, &wts, &tog).unwrap();
        std::hint::black_box(l.item());
    }
    println!("sep loss fwd (detached): {:.1} ms", t0.elapsed().as_secs_f64()/n as f64*1e3);
}
