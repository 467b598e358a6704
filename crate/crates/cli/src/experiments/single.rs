use sdde_core::sdde::Stepper;
use sdde_core::wiener::WienerPath;

use super::{Experiment, RunStatus, Setup};
use crate::error::CliResult;
use crate::output::{Cell, OutputDir};

/// One path of the delay equation at the first ε, with its projection when
/// the system is critical.
pub struct Single;

impl Experiment for Single {
    fn name(&self) -> &'static str {
        "single"
    }

    fn about(&self) -> &'static str {
        "one trajectory of the delay equation and its critical coordinates"
    }

    fn run(&self, setup: &Setup, out: &mut OutputDir) -> CliResult<RunStatus> {
        let eps = setup.cfg.numerics.eps[0];
        let cfg = setup.sdde_config(eps, setup.initial_segment(0)?);
        cfg.check_stability(setup.critical_pair().map(|p| p.omega))?;
        let w = WienerPath::new(setup.seed(0), cfg.dt())?;
        let every = setup.cfg.numerics.record_every as u64;
        let (projector, proj_every) = match setup.critical_pair() {
            Some(p) => (Some(p.projector(cfg.steps_per_delay)?), setup.checkpoint_every(p)),
            None => (None, u64::MAX),
        };

        let mut stepper = Stepper::new(&cfg, setup.scheme.clone())?;
        let mut traj = vec![[0.0, stepper.value()]];
        let mut proj = Vec::new();
        let mut noise = w.stream(0);
        let n_steps = cfg.n_steps();
        for k in 0..=n_steps {
            if k > 0 {
                if !stepper.step(noise.next_increment()) {
                    break;
                }
                if k % every == 0 || k == n_steps {
                    traj.push([stepper.time(), stepper.value()]);
                }
            }
            if let Some(p) = &projector {
                if k % proj_every == 0 || k == n_steps {
                    let (z, y) = stepper.project(p)?;
                    proj.push([stepper.time(), z[0], z[1], 0.5 * (z[0] * z[0] + z[1] * z[1]), y]);
                }
            }
        }
        out.write_csv("trajectory.csv", &["t", "x"], traj.iter().map(|r| r.map(Cell::F)))?;
        if projector.is_some() {
            out.write_csv("projection.csv", &["t", "z1", "z2", "h", "y_norm"], proj.iter().map(|r| r.map(Cell::F)))?;
        }
        let mut status = RunStatus::default();
        match stepper.blowup() {
            Some(b) => {
                out.note("blowup_time", b.t);
                status.add(1, 1);
            }
            None => status.add(0, 1),
        }
        Ok(status)
    }
}
