use swipt_core::analysis::{Model, TruncationPolicy};
use swipt_core::tradeoff::max_rate;
use swipt_core::SystemParams;

fn main() {
    for rho in [0.1f64, 0.5, 0.9] {
        let mut p = SystemParams::defaults().with_d_ph(3.0);
        p.lambda_w = 0.03;
        p.rho = rho;
        let model = Model::new(p.clone(), TruncationPolicy::for_params(&p)).unwrap();
        println!("rho={rho}: max_rate = {:?}", max_rate(&model, 0.75, 100e3));
    }
}
