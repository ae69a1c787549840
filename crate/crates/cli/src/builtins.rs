//! Builtin scenario registry: each named scenario is a constructor behind a
//! common trait, registered by name and instantiated from a parameter map
//! at runtime.

use crate::context::{NamedSet, ScenarioContext, Structure};
use crate::document::{CheckSpec, ParamMap, ParamValue};
use crate::error::{CliError, CliResult};
use qtotal_core::composite::CompositeSpace;
use qtotal_core::linalg::{CMatrix, CVector};
use qtotal_core::measurement::{PovmElement, PovmSet};
use qtotal_core::scenarios::{
    self, build_bong, build_brukner, build_stable_facts, default_e_choices, Entangler, DEFAULT_TILT,
};
use qtotal_core::twotime::Evolution;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

/// One documented builtin parameter.
#[derive(Debug, Clone)]
pub struct ParamDoc {
    pub name: &'static str,
    pub default: String,
    pub doc: &'static str,
}

pub trait Builtin: Sync + Send {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn params_doc(&self) -> Vec<ParamDoc>;
    fn default_checks(&self) -> Vec<CheckSpec>;
    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext>;

    fn has_param(&self, name: &str) -> bool {
        self.params_doc().iter().any(|p| p.name == name)
    }
}

pub struct BuiltinRegistry {
    entries: Vec<Box<dyn Builtin>>,
}

impl BuiltinRegistry {
    pub fn standard() -> Self {
        Self {
            entries: vec![
                Box::new(BruknerBuiltin),
                Box::new(BongBuiltin),
                Box::new(StableFactsBuiltin),
                Box::new(GuerinBuiltin),
                Box::new(DoubleSlitBuiltin),
            ],
        }
    }

    pub fn get(&self, name: &str) -> CliResult<&dyn Builtin> {
        self.entries
            .iter()
            .map(|b| b.as_ref())
            .find(|b| b.name() == name)
            .ok_or_else(|| CliError::UnknownScenario { name: name.into() })
    }

    pub fn entries(&self) -> impl Iterator<Item = &dyn Builtin> {
        self.entries.iter().map(|b| b.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn reject_unknown_params(builtin: &dyn Builtin, params: &ParamMap) -> CliResult<()> {
    for key in params.keys() {
        if !builtin.has_param(key) {
            return Err(CliError::UnknownParameter { name: key.clone() });
        }
    }
    Ok(())
}

fn number_param(params: &ParamMap, name: &str, default: f64) -> CliResult<f64> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .as_number()
            .ok_or_else(|| CliError::validation(format!("parameter `{name}` must be a number"))),
    }
}

fn text_param<'a>(params: &'a ParamMap, name: &str, default: &'a str) -> CliResult<&'a str> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .as_text()
            .ok_or_else(|| CliError::validation(format!("parameter `{name}` must be a string"))),
    }
}

fn named_set(name: &str, slot: Option<usize>, set: PovmSet) -> NamedSet {
    NamedSet {
        name: name.to_string(),
        slot,
        set,
    }
}

fn params_with_number(pairs: &[(&str, f64)]) -> ParamMap {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Number(*v)))
        .collect()
}

struct BruknerBuiltin;

impl Builtin for BruknerBuiltin {
    fn name(&self) -> &'static str {
        "brukner"
    }

    fn summary(&self) -> &'static str {
        "two labs sharing a theta-entangled pair; projective super-observer choices where the one-sided total law holds but the composite law fails"
    }

    fn params_doc(&self) -> Vec<ParamDoc> {
        vec![ParamDoc {
            name: "theta",
            default: format!("{FRAC_PI_2}"),
            doc: "entanglement angle of the initial wave function",
        }]
    }

    fn default_checks(&self) -> Vec<CheckSpec> {
        ["appendix-d", "total-law", "conditions", "commutators"]
            .into_iter()
            .map(CheckSpec::named)
            .collect()
    }

    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext> {
        reject_unknown_params(self, params)?;
        let theta = number_param(params, "theta", FRAC_PI_2)?;
        let sc = build_brukner(theta);
        Ok(ScenarioContext {
            name: "brukner".into(),
            space: sc.space.clone(),
            initial: sc.state.to_density("L1xL2"),
            pure: Some(sc.state.clone()),
            evolution: Evolution::identity(sc.space.total_dim(), 0.0, 1.0),
            measurements: vec![
                named_set("A1", Some(0), sc.a1.clone()),
                named_set("B1", Some(1), sc.b1.clone()),
                named_set("A2", Some(0), sc.a2.clone()),
                named_set("B2", Some(1), sc.b2.clone()),
            ],
            structure: Structure::Ewf {
                friend_c: 0,
                friend_d: 1,
                super_a: 2,
                super_b: 3,
            },
            params: params_with_number(&[("theta", theta)]),
            builtin: Some("brukner".into()),
            bong: None,
            checks: self.default_checks(),
        })
    }
}

struct BongBuiltin;

impl Builtin for BongBuiltin {
    fn name(&self) -> &'static str {
        "bong"
    }

    fn summary(&self) -> &'static str {
        "friend-and-spin labs with an entangler unitary; super-observer vs friend operators never commute within a lab, under either friend-operator variant"
    }

    fn params_doc(&self) -> Vec<ParamDoc> {
        vec![
            ParamDoc {
                name: "theta",
                default: format!("{FRAC_PI_2}"),
                doc: "entanglement angle of the shared spin pair",
            },
            ParamDoc {
                name: "tilt",
                default: format!("{DEFAULT_TILT}"),
                doc: "Bloch angle of the copy basis for the tilted-copy entangler",
            },
            ParamDoc {
                name: "entangler",
                default: "tilted-copy".into(),
                doc: "entangler variant: tilted-copy or copy",
            },
            ParamDoc {
                name: "setting",
                default: "2".into(),
                doc: "super-observer setting (1, 2, or 3) used for the measurement structure",
            },
        ]
    }

    fn default_checks(&self) -> Vec<CheckSpec> {
        ["commutators", "total-law", "conditions"]
            .into_iter()
            .map(CheckSpec::named)
            .collect()
    }

    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext> {
        reject_unknown_params(self, params)?;
        let theta = number_param(params, "theta", FRAC_PI_2)?;
        let tilt = number_param(params, "tilt", DEFAULT_TILT)?;
        let entangler = match text_param(params, "entangler", "tilted-copy")? {
            "tilted-copy" => Entangler::TiltedCopy { tilt },
            "copy" => Entangler::PlainCopy,
            other => {
                return Err(CliError::validation(format!(
                    "unknown entangler `{other}` (expected tilted-copy or copy)"
                )))
            }
        };
        let setting = number_param(params, "setting", 2.0)? as usize;
        if !(1..=3).contains(&setting) {
            return Err(CliError::validation("setting must be 1, 2, or 3"));
        }
        let sc = build_bong(entangler, default_e_choices(), theta)?;

        let complement_set = |m: &CMatrix, name: &str| -> CliResult<PovmSet> {
            let lab_dim = m.rows();
            let complement = (&CMatrix::identity(lab_dim) - m).hermitized();
            Ok(PovmSet::new(
                vec![
                    PovmElement::new(m.clone(), name.to_string(), 0)?,
                    PovmElement::new(complement, format!("not-{name}"), 1)?,
                ],
                None,
            )?)
        };
        let friend = complement_set(&sc.c_refined, "c")?;
        let superset = complement_set(&sc.a[setting - 1], "a")?;

        Ok(ScenarioContext {
            name: "bong".into(),
            space: sc.space.clone(),
            initial: sc.initial.clone(),
            pure: None,
            evolution: Evolution::identity(sc.space.total_dim(), 0.0, 1.0),
            measurements: vec![
                named_set("C", Some(0), friend.clone()),
                named_set("D", Some(1), friend),
                named_set("A", Some(0), superset.clone()),
                named_set("B", Some(1), superset),
            ],
            structure: Structure::Ewf {
                friend_c: 0,
                friend_d: 1,
                super_a: 2,
                super_b: 3,
            },
            params: {
                let mut p = params_with_number(&[
                    ("theta", theta),
                    ("tilt", tilt),
                    ("setting", setting as f64),
                ]);
                if let Some(e) = params.get("entangler") {
                    p.insert("entangler".into(), e.clone());
                }
                p
            },
            builtin: Some("bong".into()),
            bong: Some(sc),
            checks: self.default_checks(),
        })
    }
}

struct StableFactsBuiltin;

impl Builtin for StableFactsBuiltin {
    fn name(&self) -> &'static str {
        "stable-facts"
    }

    fn summary(&self) -> &'static str {
        "pointer-basis mixture probed by a non-commuting element; decoherence makes the total law hold for any probe"
    }

    fn params_doc(&self) -> Vec<ParamDoc> {
        vec![
            ParamDoc {
                name: "lambda0",
                default: "0.3".into(),
                doc: "weight of the first pointer state (the second gets 1 - lambda0)",
            },
            ParamDoc {
                name: "probe",
                default: "x-plus".into(),
                doc: "probe element: x-plus or z-zero",
            },
        ]
    }

    fn default_checks(&self) -> Vec<CheckSpec> {
        ["total-law", "conditions"]
            .into_iter()
            .map(CheckSpec::named)
            .collect()
    }

    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext> {
        reject_unknown_params(self, params)?;
        let lambda0 = number_param(params, "lambda0", 0.3)?;
        if !(0.0..=1.0).contains(&lambda0) {
            return Err(CliError::validation("lambda0 must lie in [0, 1]"));
        }
        let probe_matrix = match text_param(params, "probe", "x-plus")? {
            "x-plus" => scenarios::x_projectors().remove(0),
            "z-zero" => scenarios::z_projectors().remove(0),
            other => {
                return Err(CliError::validation(format!(
                    "unknown probe `{other}` (expected x-plus or z-zero)"
                )))
            }
        };
        let probe = PovmElement::new(probe_matrix, "probe", 0)?;
        let sc = build_stable_facts(
            vec![lambda0, 1.0 - lambda0],
            vec![CVector::basis_state(2, 0), CVector::basis_state(2, 1)],
            probe,
        )?;
        let exp = sc.experiment()?;
        let mut params_echo = params_with_number(&[("lambda0", lambda0)]);
        if let Some(p) = params.get("probe") {
            params_echo.insert("probe".into(), p.clone());
        }
        Ok(ScenarioContext {
            name: "stable-facts".into(),
            space: CompositeSpace::new(vec![("F".into(), 2)])?,
            initial: exp.initial.clone(),
            pure: None,
            evolution: exp.evolution.clone(),
            measurements: vec![
                named_set("pointer", None, exp.first.clone()),
                named_set("probe", None, exp.second.clone()),
            ],
            structure: Structure::TwoTime {
                first: 0,
                second: 1,
            },
            params: params_echo,
            builtin: Some("stable-facts".into()),
            bong: None,
            checks: self.default_checks(),
        })
    }
}

struct GuerinBuiltin;

impl Builtin for GuerinBuiltin {
    fn name(&self) -> &'static str {
        "guerin"
    }

    fn summary(&self) -> &'static str {
        "marginal-consistency check for a two-time joint: first-index marginals always consistent, second-index marginals break for non-commuting sets"
    }

    fn params_doc(&self) -> Vec<ParamDoc> {
        vec![ParamDoc {
            name: "sets",
            default: "double-slit".into(),
            doc: "measurement pair: double-slit (Z then X on |+>) or commuting (Z then Z)",
        }]
    }

    fn default_checks(&self) -> Vec<CheckSpec> {
        ["total-law", "bayes-gap", "conditions"]
            .into_iter()
            .map(CheckSpec::named)
            .collect()
    }

    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext> {
        reject_unknown_params(self, params)?;
        let exp = scenarios::double_slit_experiment()?;
        let (first, second) = match text_param(params, "sets", "double-slit")? {
            "double-slit" => (exp.first.clone(), exp.second.clone()),
            "commuting" => (exp.first.clone(), exp.first.clone()),
            other => {
                return Err(CliError::validation(format!(
                    "unknown sets `{other}` (expected double-slit or commuting)"
                )))
            }
        };
        let mut params_echo = ParamMap::new();
        if let Some(p) = params.get("sets") {
            params_echo.insert("sets".into(), p.clone());
        }
        Ok(ScenarioContext {
            name: "guerin".into(),
            space: CompositeSpace::new(vec![("S".into(), 2)])?,
            initial: exp.initial.clone(),
            pure: None,
            evolution: exp.evolution.clone(),
            measurements: vec![
                named_set("first", None, first),
                named_set("second", None, second),
            ],
            structure: Structure::TwoTime {
                first: 0,
                second: 1,
            },
            params: params_echo,
            builtin: Some("guerin".into()),
            bong: None,
            checks: self.default_checks(),
        })
    }
}

struct DoubleSlitBuiltin;

impl Builtin for DoubleSlitBuiltin {
    fn name(&self) -> &'static str {
        "double-slit"
    }

    fn summary(&self) -> &'static str {
        "|+> measured in Z then X: the minimal configuration where collapsing the intermediate outcome destroys the interference term"
    }

    fn params_doc(&self) -> Vec<ParamDoc> {
        Vec::new()
    }

    fn default_checks(&self) -> Vec<CheckSpec> {
        ["total-law", "conditions", "bayes-gap", "oracle"]
            .into_iter()
            .map(CheckSpec::named)
            .collect()
    }

    fn build(&self, params: &ParamMap) -> CliResult<ScenarioContext> {
        reject_unknown_params(self, params)?;
        let exp = scenarios::double_slit_experiment()?;
        Ok(ScenarioContext {
            name: "double-slit".into(),
            space: CompositeSpace::new(vec![("S".into(), 2)])?,
            initial: exp.initial.clone(),
            pure: None,
            evolution: exp.evolution.clone(),
            measurements: vec![
                named_set("Z", None, exp.first.clone()),
                named_set("X", None, exp.second.clone()),
            ],
            structure: Structure::TwoTime {
                first: 0,
                second: 1,
            },
            params: BTreeMap::new(),
            builtin: Some("double-slit".into()),
            bong: None,
            checks: self.default_checks(),
        })
    }
}
