use nalgebra::{DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use super::jacobian_unchecked;
use crate::error::{Error, Result};
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkOptions {
    /// mm
    pub pos_tol: f64,
    /// degrees
    pub ori_tol: f64,
    /// Iterations per attempt.
    pub max_iters: usize,
    /// Random restarts after the first attempt from the home pose.
    pub restarts: usize,
    pub damping: f64,
    pub rng_seed: u64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            pos_tol: 1.0,
            ori_tol: 0.5,
            max_iters: 200,
            restarts: 8,
            damping: 0.05,
            rng_seed: 0,
        }
    }
}

impl IkOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pos_tol", self.pos_tol),
            ("ori_tol", self.ori_tol),
            ("damping", self.damping),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkSolution {
    /// degrees
    pub joints: Vec<f64>,
    /// Iterations summed over all attempts.
    pub iterations: usize,
    pub attempts: usize,
    /// mm
    pub pos_err: f64,
    /// degrees
    pub ori_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IkOutcome {
    Solved(IkSolution),
    NotReachable { iterations: usize, attempts: usize },
}

impl IkOutcome {
    pub fn solution(&self) -> Option<&IkSolution> {
        match self {
            IkOutcome::Solved(s) => Some(s),
            IkOutcome::NotReachable { .. } => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, IkOutcome::Solved(_))
    }
}

/// Damped least-squares IK with joint clamping and seeded random restarts.
pub fn ik(chain: &KinematicChain, target: &Pose, opts: &IkOptions) -> Result<IkOutcome> {
    ik_accepting(chain, target, opts, |_| true)
}

/// Like [`ik`], but a converged configuration only counts if `accept`
/// returns true for it; otherwise the search moves on to the next restart.
pub fn ik_accepting(
    chain: &KinematicChain,
    target: &Pose,
    opts: &IkOptions,
    mut accept: impl FnMut(&[f64]) -> bool,
) -> Result<IkOutcome> {
    opts.validate()?;
    if chain.joints.is_empty() {
        return Err(Error::Validation("chain has no joints".into()));
    }
    let attempts_total = opts.restarts + 1;
    if target.position.norm() > chain.reach() + opts.pos_tol {
        return Ok(IkOutcome::NotReachable {
            iterations: 0,
            attempts: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let solver = Dls::new(chain, target, opts);
    let mut iterations = 0;
    for attempt in 0..attempts_total {
        let start: Vec<f64> = if attempt == 0 {
            chain.seed_configuration()
        } else {
            chain
                .joints
                .iter()
                .map(|j| rng.random_range(j.lo..=j.hi))
                .collect()
        };
        let (q, used, errs) = solver.run(start);
        iterations += used;
        if let Some((pos_err, ori_err)) = errs {
            if accept(&q) {
                return Ok(IkOutcome::Solved(IkSolution {
                    joints: q,
                    iterations,
                    attempts: attempt + 1,
                    pos_err,
                    ori_err,
                }));
            }
        }
    }
    Ok(IkOutcome::NotReachable {
        iterations,
        attempts: attempts_total,
    })
}

/// Iterations without a 1% error improvement before an attempt is dropped.
const STALL_WINDOW: usize = 20;
/// Largest joint step per iteration, rad.
const MAX_STEP: f64 = 0.4;

struct Dls<'a> {
    chain: &'a KinematicChain,
    target: &'a Pose,
    opts: &'a IkOptions,
    /// Converts mm to the same scale as radians.
    length_scale: f64,
}

impl<'a> Dls<'a> {
    fn new(chain: &'a KinematicChain, target: &'a Pose, opts: &'a IkOptions) -> Self {
        Self {
            chain,
            target,
            opts,
            length_scale: chain.reach().max(1.0),
        }
    }

    /// Runs one attempt. Returns the final joints, the iterations used and
    /// the errors if it converged.
    fn run(&self, start: Vec<f64>) -> (Vec<f64>, usize, Option<(f64, f64)>) {
        let chain = self.chain;
        let n = chain.dof();
        let mut q = start;
        chain.clamp(&mut q);
        let lambda2 = self.opts.damping * self.opts.damping;
        let mut best = f64::INFINITY;
        let mut best_at = 0;

        for it in 0..=self.opts.max_iters {
            let (pose, mut jac) = jacobian_unchecked(chain, &q);
            let dp = self.target.position - pose.position;
            let dr = (self.target.orientation * pose.orientation.inverse()).scaled_axis();
            let pos_err = dp.norm();
            let ori_err = dr.norm().to_degrees();
            if pos_err <= self.opts.pos_tol && ori_err <= self.opts.ori_tol {
                return (q, it, Some((pos_err, ori_err)));
            }
            if it == self.opts.max_iters {
                return (q, it, None);
            }

            let err = Vector6::new(
                dp.x / self.length_scale,
                dp.y / self.length_scale,
                dp.z / self.length_scale,
                dr.x,
                dr.y,
                dr.z,
            );
            let norm = err.norm();
            if norm < best * 0.99 {
                best = norm;
                best_at = it;
            } else if it - best_at > STALL_WINDOW {
                return (q, it + 1, None);
            }

            for mut row in jac.rows_mut(0, 3).row_iter_mut() {
                row /= self.length_scale;
            }
            let jjt = &jac * jac.transpose() + Matrix6::identity() * lambda2;
            let Some(chol) = jjt.cholesky() else {
                return (q, it + 1, None);
            };
            let mut step: DVector<f64> = jac.transpose() * chol.solve(&err);
            let len = step.norm();
            if len > MAX_STEP {
                step *= MAX_STEP / len;
            }
            for i in 0..n {
                q[i] += step[i].to_degrees();
            }
            chain.clamp(&mut q);
        }
        unreachable!("loop returns on the last iteration")
    }
}
