use crate::dynamics::System;
use crate::{Error, Real, Result};

fn check_r_star<T: Real>(r_star: T) -> Result<()> {
    if r_star > T::of(-1.5) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "decay character must exceed -3/2, got {r_star}"
        )))
    }
}

/// δ enters as the cap `3/2 - δ` on the final bootstrap stage, which must
/// not undercut the preceding stage `β = 1`; hence `0 < δ ≤ 1/2`.
fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta > T::zero() && delta <= T::of(0.5) {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1/2], got {delta}")))
    }
}

/// Upper-bound decay exponent `p` in `‖u(t)‖² ≤ C(1+t)^{-p}`:
///
/// * Temam (same as Navier-Stokes): `min{3/2 + r*, 5/2}`
/// * Lelièvre: `min{3/2 + r*, 3/2 - δ}`
/// * linear flow: `3/2 + r*` (sharp)
///
/// `r* = +∞` is accepted and yields the respective caps.
pub fn predicted_exponent<T: Real>(system: System, r_star: T, delta: T) -> Result<T> {
    check_r_star(r_star)?;
    let linear = T::of(1.5) + r_star;
    Ok(match system {
        System::Temam => {
            if !(delta > T::zero()) {
                return Err(Error::invalid(format!("delta must be positive, got {delta}")));
            }
            linear.min(T::of(2.5))
        }
        System::Lelievre => {
            check_delta(delta)?;
            linear.min(T::of(1.5) - delta)
        }
        System::LinearOnly => {
            if !(delta > T::zero()) {
                return Err(Error::invalid(format!("delta must be positive, got {delta}")));
            }
            linear
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapState<T> {
    pub beta: T,
    /// Every β reached, starting from 0; nondecreasing.
    pub history: Vec<T>,
    pub r_star: T,
    pub delta: T,
}

/// Replays the improvement chain for the Lelièvre energy exponent.
///
/// Each stage turns a bound `(1+t)^{-β}` into `(1+t)^{-β'}` with
/// `β' = min{3/2 + r*, β + 1/2}` while `β < 1`, and
/// `β' = min{3/2 + r*, 3/2 - δ}` once `β ≥ 1` (the logarithm produced at
/// that stage is absorbed into `(1+t)^δ`). The chain stops as soon as a
/// stage gives no improvement.
pub fn bootstrap_sequence<T: Real>(r_star: T, delta: T) -> Result<BootstrapState<T>> {
    check_r_star(r_star)?;
    check_delta(delta)?;
    let cap = T::of(1.5) + r_star;
    let mut beta = T::zero();
    let mut history = vec![beta];
    loop {
        let stage = if beta < T::one() {
            T::of(0.5) + beta
        } else {
            T::of(1.5) - delta
        };
        let next = cap.min(stage);
        if !(next > beta) {
            break;
        }
        beta = next;
        history.push(beta);
    }
    Ok(BootstrapState {
        beta,
        history,
        r_star,
        delta,
    })
}
