//! Closed-form, analytically differentiable time schedules.
//!
//! Schedules drive both the Hamiltonian parameters and the dressing
//! coefficients `μₙ(t)`. Every built-in kind has an exact derivative so the
//! dressing-map derivative can be checked against finite differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real or complex scalar; written as `1.5` or `[re, im]` in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScalarRepr", into = "ScalarRepr")]
pub struct Scalar(pub Complex64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Real(f64),
    Complex([f64; 2]),
}

impl From<ScalarRepr> for Scalar {
    fn from(r: ScalarRepr) -> Self {
        match r {
            ScalarRepr::Real(x) => Scalar(Complex64::new(x, 0.0)),
            ScalarRepr::Complex([re, im]) => Scalar(Complex64::new(re, im)),
        }
    }
}

impl From<Scalar> for ScalarRepr {
    fn from(s: Scalar) -> Self {
        if s.0.im == 0.0 {
            ScalarRepr::Real(s.0.re)
        } else {
            ScalarRepr::Complex([s.0.re, s.0.im])
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar(Complex64::new(x, 0.0))
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Scalar(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    /// `value`
    Constant { value: Scalar },
    /// `base + rate·t`
    LinearRamp { base: Scalar, rate: f64 },
    /// `base·exp(rate·t)`
    Exponential { base: Scalar, rate: f64 },
    /// `base·(1 + amplitude·sin(frequency·t + phase))`
    Sinusoidal {
        base: Scalar,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl ScheduleSpec {
    pub fn constant(value: impl Into<Scalar>) -> Self {
        ScheduleSpec::Constant {
            value: value.into(),
        }
    }

    pub fn linear_ramp(base: impl Into<Scalar>, rate: f64) -> Self {
        ScheduleSpec::LinearRamp {
            base: base.into(),
            rate,
        }
    }

    pub fn exponential(base: impl Into<Scalar>, rate: f64) -> Self {
        ScheduleSpec::Exponential {
            base: base.into(),
            rate,
        }
    }

    pub fn sinusoidal(base: impl Into<Scalar>, amplitude: f64, frequency: f64, phase: f64) -> Self {
        ScheduleSpec::Sinusoidal {
            base: base.into(),
            amplitude,
            frequency,
            phase,
        }
    }

    /// All built-in kinds are smooth in `t`.
    pub fn is_differentiable(&self) -> bool {
        true
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ScheduleSpec::Constant { .. } => true,
            ScheduleSpec::LinearRamp { rate, .. } | ScheduleSpec::Exponential { rate, .. } => {
                rate == 0.0
            }
            ScheduleSpec::Sinusoidal {
                amplitude,
                frequency,
                ..
            } => amplitude == 0.0 || frequency == 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match *self {
            ScheduleSpec::Constant { value } => value.0,
            ScheduleSpec::LinearRamp { base, rate } => base.0 + rate * t,
            ScheduleSpec::Exponential { base, rate } => base.0 * (rate * t).exp(),
            ScheduleSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => base.0 * (1.0 + amplitude * (frequency * t + phase).sin()),
        }
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        match *self {
            ScheduleSpec::Constant { .. } => Complex64::new(0.0, 0.0),
            ScheduleSpec::LinearRamp { rate, .. } => Complex64::new(rate, 0.0),
            ScheduleSpec::Exponential { base, rate } => base.0 * rate * (rate * t).exp(),
            ScheduleSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => base.0 * (amplitude * frequency * (frequency * t + phase).cos()),
        }
    }

    /// Whether the schedule can take non-real values.
    pub fn has_imaginary_part(&self) -> bool {
        let base = match *self {
            ScheduleSpec::Constant { value } => value,
            ScheduleSpec::LinearRamp { base, .. }
            | ScheduleSpec::Exponential { base, .. }
            | ScheduleSpec::Sinusoidal { base, .. } => base,
        };
        base.0.im != 0.0
    }

    /// Checks that the schedule is finite and never zero on `[t0, t1]`.
    pub fn validate_nonvanishing(&self, name: &str, t0: f64, t1: f64) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::VanishingSchedule {
                name: name.to_string(),
                t0,
                t1,
                reason,
            })
        };
        self.validate_finite(name)?;
        match *self {
            ScheduleSpec::Constant { value } if value.0 == Complex64::new(0.0, 0.0) => {
                fail("constant value is zero".into())
            }
            ScheduleSpec::Exponential { base, .. } | ScheduleSpec::Sinusoidal { base, .. }
                if base.0 == Complex64::new(0.0, 0.0) =>
            {
                fail("base is zero".into())
            }
            ScheduleSpec::Sinusoidal { amplitude, .. } if amplitude.abs() >= 1.0 => fail(format!(
                "sinusoidal amplitude |a| = {} must be < 1",
                amplitude.abs()
            )),
            ScheduleSpec::LinearRamp { base, rate } => {
                if base.0.im != 0.0 {
                    return Ok(());
                }
                if rate == 0.0 {
                    return if base.0.re == 0.0 {
                        fail("constant ramp at zero".into())
                    } else {
                        Ok(())
                    };
                }
                let root = -base.0.re / rate;
                if (t0..=t1).contains(&root) {
                    fail(format!("ramp crosses zero at t = {root}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn validate_finite(&self, name: &str) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        let ok = match *self {
            ScheduleSpec::Constant { value } => finite(value.0.re) && finite(value.0.im),
            ScheduleSpec::LinearRamp { base, rate } | ScheduleSpec::Exponential { base, rate } => {
                finite(base.0.re) && finite(base.0.im) && finite(rate)
            }
            ScheduleSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
                phase,
            } => {
                finite(base.0.re)
                    && finite(base.0.im)
                    && finite(amplitude)
                    && finite(frequency)
                    && finite(phase)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(name, "schedule coefficients must be finite"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn central_difference(s: &ScheduleSpec, t: f64, h: f64) -> Complex64 {
        (s.eval(t + h) - s.eval(t - h)) / (2.0 * h)
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(ScheduleSpec::constant(1.0).eval(5.0).re, 1.0);
        let e = ScheduleSpec::exponential(1.0, 0.3).eval(1.0);
        assert!((e.re - 1.349_858_807_576_003).abs() < 1e-12);
        let s = ScheduleSpec::sinusoidal(1.0, 0.5, 2.0, 0.0).eval(PI / 4.0);
        assert!((s.re - 1.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_derivatives() {
        assert_eq!(ScheduleSpec::constant(3.0).derivative(2.0).norm(), 0.0);
        let d = ScheduleSpec::exponential(1.0, 0.3).derivative(0.0);
        assert!((d.re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let schedules = [
            ScheduleSpec::constant(Complex64::new(0.7, -0.2)),
            ScheduleSpec::linear_ramp(Complex64::new(0.5, 0.1), -0.4),
            ScheduleSpec::exponential(Complex64::new(1.0, 0.5), 0.3),
            ScheduleSpec::sinusoidal(2.0, 0.5, 3.0, 0.25),
        ];
        for s in &schedules {
            for k in 0..=20 {
                let t = -1.0 + 0.1 * k as f64;
                let value = s.eval(t);
                let fd = central_difference(s, t, 1e-6);
                let err = (s.derivative(t) - fd).norm();
                assert!(err < 1e-8 * (1.0 + value.norm()), "{s:?} at {t}: {err}");
            }
        }
    }

    #[test]
    fn nonvanishing_validation() {
        let s = ScheduleSpec::sinusoidal(1.0, 1.0, 2.0, 0.0);
        assert!(matches!(
            s.validate_nonvanishing("mu[0]", 0.0, 1.0),
            Err(Error::VanishingSchedule { .. })
        ));
        assert!(ScheduleSpec::sinusoidal(1.0, 0.99, 2.0, 0.0)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_ok());
        assert!(ScheduleSpec::linear_ramp(1.0, -2.0)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_err());
        assert!(ScheduleSpec::linear_ramp(1.0, -0.5)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_ok());
        assert!(ScheduleSpec::linear_ramp(Complex64::new(0.0, 1.0), -2.0)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_ok());
        assert!(ScheduleSpec::constant(0.0)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_err());
        assert!(ScheduleSpec::exponential(0.0, 1.0)
            .validate_nonvanishing("mu", 0.0, 1.0)
            .is_err());
    }

    #[test]
    fn scalar_accepts_real_and_complex_forms() {
        #[derive(Deserialize)]
        struct Doc {
            a: Scalar,
            b: Scalar,
        }
        let doc: Doc = toml::from_str("a = 1.5\nb = [0.5, -2.0]").unwrap();
        assert_eq!(doc.a.0, Complex64::new(1.5, 0.0));
        assert_eq!(doc.b.0, Complex64::new(0.5, -2.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn validated_schedule() -> impl Strategy<Value = ScheduleSpec> {
            prop_oneof![
                (0.1f64..3.0).prop_map(ScheduleSpec::constant),
                (0.1f64..3.0, -2.0f64..2.0).prop_map(|(b, r)| ScheduleSpec::exponential(b, r)),
                (0.1f64..3.0, -0.99f64..0.99, 0.0f64..10.0, -3.0f64..3.0)
                    .prop_map(|(b, a, w, p)| ScheduleSpec::sinusoidal(b, a, w, p)),
                (0.5f64..3.0, -0.4f64..0.4).prop_map(|(b, r)| ScheduleSpec::linear_ramp(b, r)),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn validated_schedules_never_vanish(s in validated_schedule()) {
                prop_assume!(s.validate_nonvanishing("mu", 0.0, 1.0).is_ok());
                for k in 0..10_000 {
                    let t = k as f64 / 9_999.0;
                    let v = s.eval(t);
                    prop_assert!(v.norm() > 0.0 && v.re.is_finite());
                }
            }
        }
    }
}
