use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParamStore, Result, Tape, Var};

/// Settings for [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub h: f64,
    pub max_coords: usize,
    /// Lower bound on the relative-error denominator.
    pub floor: f64,
    /// A coordinate is treated as sitting on a kink when its forward and
    /// backward one-sided slopes differ by more than this, relative to
    /// `max(1, |slope|)`.
    pub kink_tol: f64,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            h: 1e-5,
            max_coords: 200,
            floor: 1e-5,
            kink_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub n_checked: usize,
    pub n_excluded: usize,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// Compares reverse-mode gradients of the scalar built by `f` against
/// central differences over a deterministic sample of parameter
/// coordinates. Every evaluation runs on a fresh clone of `store`, so
/// batch-norm running statistics do not drift between evaluations.
pub fn gradient_check<F>(store: &ParamStore, f: F, cfg: &GradCheck) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &mut ParamStore) -> Result<Var>,
{
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut s = s.clone();
        let mut tape = Tape::new();
        let out = f(&mut tape, &mut s)?;
        Ok(tape.value(out).get(0, 0))
    };
    let analytic = {
        let mut s = store.clone();
        let mut tape = Tape::new();
        let out = f(&mut tape, &mut s)?;
        tape.backward(out)?.params(store)
    };

    let coords: Vec<(String, usize)> = store
        .iter()
        .flat_map(|(name, t)| (0..t.len()).map(move |i| (name.to_string(), i)))
        .collect();
    let picked: Vec<usize> = if coords.len() <= cfg.max_coords {
        (0..coords.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut v = index::sample(&mut rng, coords.len(), cfg.max_coords).into_vec();
        v.sort_unstable();
        v
    };

    let f0 = eval(store)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        n_checked: 0,
        n_excluded: 0,
        worst: None,
    };
    let mut probe = store.clone();
    for &c in &picked {
        let (name, i) = &coords[c];
        let x = probe.get(name)?.data()[*i];
        probe.get_mut(name)?.data_mut()[*i] = x + cfg.h;
        let fp = eval(&probe)?;
        probe.get_mut(name)?.data_mut()[*i] = x - cfg.h;
        let fm = eval(&probe)?;
        probe.get_mut(name)?.data_mut()[*i] = x;

        let fwd = (fp - f0) / cfg.h;
        let bwd = (f0 - fm) / cfg.h;
        if (fwd - bwd).abs() > cfg.kink_tol * fwd.abs().max(bwd.abs()).max(1.0) {
            report.n_excluded += 1;
            continue;
        }
        let numeric = (fp - fm) / (2.0 * cfg.h);
        let a = analytic[name].data()[*i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
        report.n_checked += 1;
        if rel > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(rel);
            report.worst = Some((name.clone(), *i));
        }
    }
    Ok(report)
}
