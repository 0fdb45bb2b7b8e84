//! Self-contained gradient verification suite: every loss, every network,
//! every chained path, against central finite differences on tiny instances.

use cse_core::disc::{DiscParams, DiscSpec, Discriminator};
use cse_core::losses::{
    acse_total, cse_total, disc_loss_clean, disc_loss_noisy, identity_loss_clean,
    identity_loss_noisy, loss_cc, loss_cn, loss_nc, loss_nn, AcseWeights, CseWeights,
};
use cse_core::lstm::{MappingNetwork, MappingParams, MappingSpec};
use cse_core::params::{grad_check, Tensors};
use cse_core::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPSILON: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

pub struct CheckResult {
    pub name: &'static str,
    pub max_rel_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

struct Nets {
    f: MappingNetwork,
    g: MappingNetwork,
    d_noisy: Discriminator,
    d_clean: Discriminator,
    u: Mat,
    v: Mat,
}

/// Tiny instances at a generic operating point: biases jittered off the ReLU
/// kinks, weights scaled so deep recurrent gradients stay measurable.
fn nets(seed: u64) -> Nets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = MappingNetwork::init(
        MappingSpec { input_dim: 6, output_dim: 2, hidden: 8, proj: 4, layers: 2 },
        &mut rng,
    )
    .expect("spec");
    let mut g = MappingNetwork::init(
        MappingSpec { input_dim: 2, output_dim: 6, hidden: 8, proj: 4, layers: 2 },
        &mut rng,
    )
    .expect("spec");
    f.params.scale(2.0);
    g.params.scale(2.0);
    let mut d_noisy =
        Discriminator::init(DiscSpec { input_dim: 6, hidden: 16 }, &mut rng).expect("spec");
    let mut d_clean =
        Discriminator::init(DiscSpec { input_dim: 2, hidden: 16 }, &mut rng).expect("spec");
    for d in [&mut d_noisy, &mut d_clean] {
        for v in d.params.b1.as_mut_slice().iter_mut() {
            *v = rng.random_range(-0.2..0.2);
        }
        for v in d.params.b2.as_mut_slice().iter_mut() {
            *v = rng.random_range(-0.2..0.2);
        }
        d.params.b3[(0, 0)] = rng.random_range(-0.2..0.2);
    }
    let u = Mat::from_fn(6, 6, |_, _| rng.random_range(-0.5..0.5));
    let v = Mat::from_fn(5, 2, |_, _| rng.random_range(-0.5..0.5));
    Nets { f, g, d_noisy, d_clean, u, v }
}

fn check_map(
    net: &MappingNetwork,
    analytic: &MappingParams,
    loss: impl Fn(&MappingNetwork) -> f64,
) -> f64 {
    let probe = |p: &MappingParams| loss(&MappingNetwork { spec: net.spec, params: p.clone() });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    grad_check(&net.params, analytic, probe, EPSILON, None, &mut rng).expect("grad check")
}

fn check_disc(d: &Discriminator, analytic: &DiscParams, loss: impl Fn(&Discriminator) -> f64) -> f64 {
    let probe = |p: &DiscParams| loss(&Discriminator { spec: d.spec, params: p.clone() });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    grad_check(&d.params, analytic, probe, EPSILON, None, &mut rng).expect("grad check")
}

/// Run the full suite. Deterministic: same results on every call.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, err: f64| out.push(CheckResult { name, max_rel_error: err });

    // direct mapping losses, targets near the operating point
    {
        let n = nets(11);
        let (f_out, _) = n.f.forward(&n.u).expect("forward");
        let y = Mat::from_fn(f_out.rows(), 2, |t, c| {
            f_out[(t, c)] + 0.02 * ((t + 2 * c) as f64).sin()
        });
        let (_, grads) = loss_nc(&n.f, &n.u, &y).expect("loss");
        push("nc_wrt_f", check_map(&n.f, &grads, |f| loss_nc(f, &n.u, &y).unwrap().0));
        let (g_out, _) = n.g.forward(&n.v).expect("forward");
        let x = Mat::from_fn(g_out.rows(), 6, |t, c| {
            g_out[(t, c)] + 0.02 * ((t + c) as f64).cos()
        });
        let (_, grads) = loss_cn(&n.g, &n.v, &x).expect("loss");
        push("cn_wrt_g", check_map(&n.g, &grads, |g| loss_cn(g, &n.v, &x).unwrap().0));
    }

    // cycle losses chained across both networks
    {
        let n = nets(12);
        let (_, gf, gg) = loss_nn(&n.f, &n.g, &n.u).expect("loss");
        push("nn_wrt_f", check_map(&n.f, &gf, |f| loss_nn(f, &n.g, &n.u).unwrap().0));
        push("nn_wrt_g", check_map(&n.g, &gg, |g| loss_nn(&n.f, g, &n.u).unwrap().0));
        let (_, gf, gg) = loss_cc(&n.g, &n.f, &n.v).expect("loss");
        push("cc_wrt_f", check_map(&n.f, &gf, |f| loss_cc(&n.g, f, &n.v).unwrap().0));
        push("cc_wrt_g", check_map(&n.g, &gg, |g| loss_cc(g, &n.f, &n.v).unwrap().0));
    }

    // discrimination losses
    {
        let n = nets(13);
        let (u_hat, _) = n.g.forward(&n.v).expect("forward");
        let dn = disc_loss_noisy(&n.d_noisy, &n.u, &u_hat).expect("loss");
        push("dn_wrt_d", check_disc(&n.d_noisy, &dn.grad_d, |d| {
            disc_loss_noisy(d, &n.u, &u_hat).unwrap().value
        }));
        let (v_hat, _) = n.f.forward(&n.u).expect("forward");
        let dc = disc_loss_clean(&n.d_clean, &n.v, &v_hat).expect("loss");
        push("dc_wrt_d", check_disc(&n.d_clean, &dc.grad_d, |d| {
            disc_loss_clean(d, &n.v, &v_hat).unwrap().value
        }));
    }

    // identity losses
    {
        let n = nets(14);
        let (_, gin) = identity_loss_noisy(&n.g, &n.u).expect("loss");
        push("id_noisy_wrt_g", check_map(&n.g, &gin, |g| {
            identity_loss_noisy(g, &n.u).unwrap().0
        }));
        let (_, gic) = identity_loss_clean(&n.f, &n.v, 2).expect("loss");
        push("id_clean_wrt_f", check_map(&n.f, &gic, |f| {
            identity_loss_clean(f, &n.v, 2).unwrap().0
        }));
    }

    // parallel total
    {
        let n = nets(15);
        let (f_out, _) = n.f.forward(&n.u).expect("forward");
        let y = Mat::from_fn(f_out.rows(), 2, |t, c| {
            f_out[(t, c)] + 0.02 * ((t * 2 + c) as f64).sin()
        });
        let w = CseWeights::default();
        let b = cse_total(&n.f, &n.g, &n.u, &y, &w, true).expect("loss");
        push("cse_total_wrt_f", check_map(&n.f, &b.grad_f, |f| {
            cse_total(f, &n.g, &n.u, &y, &w, true).unwrap().total
        }));
        push("cse_total_wrt_g", check_map(&n.g, &b.grad_g, |g| {
            cse_total(&n.f, g, &n.u, &y, &w, true).unwrap().total
        }));
    }

    // adversarial total; moderate weights keep the probe's noise floor low
    {
        let n = nets(13);
        let w = AcseWeights { alpha1: 0.7, alpha2: 0.4, alpha3: 0.4, alpha4: 0.5, alpha5: 0.5 };
        let b = acse_total(&n.f, &n.g, &n.d_noisy, &n.d_clean, &n.u, &n.v, &w, 2).expect("loss");
        // the reversal layer makes F and G descend effective objectives in
        // which their own discrimination term enters positively; the min-max
        // scalar itself is only the right probe for the discriminators
        push("acse_total_wrt_f", check_map(&n.f, &b.grad_f, |f| {
            let b = acse_total(f, &n.g, &n.d_noisy, &n.d_clean, &n.u, &n.v, &w, 2).unwrap();
            b.nn + w.alpha1 * b.cc + w.alpha3 * b.dc + w.alpha5 * b.id_clean
        }));
        push("acse_total_wrt_g", check_map(&n.g, &b.grad_g, |g| {
            let b = acse_total(&n.f, g, &n.d_noisy, &n.d_clean, &n.u, &n.v, &w, 2).unwrap();
            b.nn + w.alpha1 * b.cc + w.alpha2 * b.dn + w.alpha4 * b.id_noisy
        }));
        push("acse_total_wrt_d_noisy", check_disc(&n.d_noisy, &b.grad_d_noisy, |d| {
            acse_total(&n.f, &n.g, d, &n.d_clean, &n.u, &n.v, &w, 2).unwrap().total
        }));
        push("acse_total_wrt_d_clean", check_disc(&n.d_clean, &b.grad_d_clean, |d| {
            acse_total(&n.f, &n.g, &n.d_noisy, d, &n.u, &n.v, &w, 2).unwrap().total
        }));
    }

    out
}
