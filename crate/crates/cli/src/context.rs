//! Runtime scenario: validated domain objects plus the measurement
//! structure the checks dispatch on. Built either from a builtin or from an
//! explicit document; a document carrying both starts from the builtin and
//! overrides section by section.

use crate::builtins::BuiltinRegistry;
use crate::document::{
    matrix_from_doc, matrix_to_doc, vector_from_doc, vector_to_doc, CheckSpec, ElementsDoc,
    EvolutionDoc, FactorDoc, MeasurementDoc, ParamMap, ScenarioDoc, SpaceDoc, StateDoc,
};
use crate::error::{CliError, CliResult};
use qtotal_core::composite::{lift, CompositeSpace, EwfExperiment};
use qtotal_core::linalg::CMatrix;
use qtotal_core::measurement::{DensityOperator, PovmElement, PovmSet, PureState, VALIDATION_TOL};
use qtotal_core::scenarios::{x_projectors, z_projectors, BongScenario};
use qtotal_core::twotime::{Evolution, TwoTimeExperiment};

/// A POVM set with its declared name; local sets carry the slot they act on
/// and are lifted on demand.
#[derive(Debug, Clone)]
pub struct NamedSet {
    pub name: String,
    pub slot: Option<usize>,
    pub set: PovmSet,
}

/// How the measurement list maps onto the two-time engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Indexes of the first and second sets.
    TwoTime { first: usize, second: usize },
    /// Indexes of friend C, friend D, super A, super B.
    Ewf {
        friend_c: usize,
        friend_d: usize,
        super_a: usize,
        super_b: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub name: String,
    pub space: CompositeSpace,
    pub initial: DensityOperator,
    /// Retained when the state was given (or built) as a vector.
    pub pure: Option<PureState>,
    pub evolution: Evolution,
    pub measurements: Vec<NamedSet>,
    pub structure: Structure,
    pub params: ParamMap,
    pub builtin: Option<String>,
    /// Present for the bong builtin; drives the full commutator report.
    pub bong: Option<BongScenario>,
    pub checks: Vec<CheckSpec>,
}

impl ScenarioContext {
    pub fn theta(&self) -> Option<f64> {
        self.params.get("theta").and_then(|p| p.as_number())
    }

    /// The set lifted to the full space when it is slot-local.
    pub fn lifted_set(&self, index: usize) -> CliResult<PovmSet> {
        let named = &self.measurements[index];
        match named.slot {
            None => Ok(named.set.clone()),
            Some(slot) => {
                let elements = named
                    .set
                    .elements()
                    .iter()
                    .map(|e| {
                        Ok(PovmElement::new(
                            lift(e.matrix(), slot, &self.space)?,
                            e.name().to_string(),
                            e.index(),
                        )?)
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(PovmSet::new(
                    elements,
                    named.set.setting_label().map(|s| s.to_string()),
                )?)
            }
        }
    }

    /// EWF view; present only for EWF-structured scenarios.
    pub fn ewf_experiment(&self) -> CliResult<Option<EwfExperiment>> {
        let Structure::Ewf {
            friend_c,
            friend_d,
            super_a,
            super_b,
        } = self.structure
        else {
            return Ok(None);
        };
        let exp = EwfExperiment::new(
            self.space.clone(),
            self.initial.clone(),
            self.measurements[friend_c].set.clone(),
            self.measurements[friend_d].set.clone(),
            self.measurements[super_a].set.clone(),
            self.measurements[super_b].set.clone(),
            self.evolution.clone(),
        )?;
        Ok(Some(exp))
    }

    /// Two-time view: direct for two-set scenarios, lifted product sets for
    /// EWF scenarios.
    pub fn two_time_experiment(&self) -> CliResult<TwoTimeExperiment> {
        match self.structure {
            Structure::TwoTime { first, second } => Ok(TwoTimeExperiment::new(
                self.initial.clone(),
                self.lifted_set(first)?,
                self.evolution.clone(),
                self.lifted_set(second)?,
                0.5 * (self.evolution.t_start() + self.evolution.t_end()),
                self.evolution.t_end() + 1.0,
            )?),
            Structure::Ewf { .. } => {
                let exp = self.ewf_experiment()?.expect("structure checked");
                let (first, second) = qtotal_core::oracle::ewf_product_sets(&exp)?;
                Ok(TwoTimeExperiment::new(
                    self.initial.clone(),
                    first,
                    self.evolution.clone(),
                    second,
                    0.5 * (self.evolution.t_start() + self.evolution.t_end()),
                    self.evolution.t_end() + 1.0,
                )?)
            }
        }
    }

    /// Materializes the context back into a document. Builtin-backed
    /// contexts keep their builtin reference alongside the explicit
    /// sections, so either path reproduces the same objects.
    pub fn to_document(&self) -> ScenarioDoc {
        let state = StateDoc {
            builtin: self.builtin.clone(),
            params: None,
            pure: self.pure.as_ref().map(|p| vector_to_doc(p.vector())),
            density: if self.pure.is_none() {
                Some(matrix_to_doc(self.initial.matrix()))
            } else {
                None
            },
        };
        let identity = CMatrix::identity(self.space.total_dim());
        let evolution = if self.evolution.unitary().approx_eq(&identity, 0.0) {
            EvolutionDoc::Named("identity".into())
        } else {
            EvolutionDoc::Unitary {
                unitary: matrix_to_doc(self.evolution.unitary()),
            }
        };
        let measurements = self
            .measurements
            .iter()
            .map(|named| MeasurementDoc {
                name: named.name.clone(),
                slot: named
                    .slot
                    .map(|s| self.space.label(s).expect("slot valid").to_string()),
                elements: ElementsDoc::Matrices(
                    named
                        .set
                        .elements()
                        .iter()
                        .map(|e| matrix_to_doc(e.matrix()))
                        .collect(),
                ),
                labels: Some(
                    named
                        .set
                        .elements()
                        .iter()
                        .map(|e| e.name().to_string())
                        .collect(),
                ),
            })
            .collect();
        ScenarioDoc {
            name: Some(self.name.clone()),
            space: Some(SpaceDoc {
                factors: self
                    .space
                    .factors()
                    .iter()
                    .map(|(label, dim)| FactorDoc {
                        label: label.clone(),
                        dim: *dim,
                    })
                    .collect(),
            }),
            state: Some(state),
            evolution: Some(evolution),
            measurements: Some(measurements),
            params: if self.params.is_empty() {
                None
            } else {
                Some(self.params.clone())
            },
            checks: if self.checks.is_empty() {
                None
            } else {
                Some(
                    self.checks
                        .iter()
                        .cloned()
                        .map(crate::document::CheckSpecDoc::Detailed)
                        .collect(),
                )
            },
        }
    }
}

fn named_elements(name: &str) -> CliResult<Vec<CMatrix>> {
    match name {
        "z-projectors" => Ok(z_projectors()),
        "x-projectors" => Ok(x_projectors()),
        other => Err(CliError::validation(format!(
            "unknown named element family `{other}` (expected z-projectors or x-projectors)"
        ))),
    }
}

fn build_set(doc: &MeasurementDoc, expected_dim: usize) -> CliResult<PovmSet> {
    let matrices = match &doc.elements {
        ElementsDoc::Named(name) => named_elements(name)?,
        ElementsDoc::Matrices(ms) => ms
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_doc(m, &format!("measurements[{}].elements[{i}]", doc.name)))
            .collect::<CliResult<Vec<_>>>()?,
    };
    let elements = matrices
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            if m.rows() != expected_dim {
                return Err(CliError::validation(format!(
                    "measurement `{}` element {i}: dimension {} does not match {}",
                    doc.name,
                    m.rows(),
                    expected_dim
                )));
            }
            let label = doc
                .labels
                .as_ref()
                .and_then(|l| l.get(i).cloned())
                .unwrap_or_else(|| i.to_string());
            Ok(PovmElement::new(m, label, i)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(PovmSet::new(elements, Some(doc.name.clone()))?)
}

fn infer_structure(measurements: &[NamedSet]) -> CliResult<Structure> {
    match measurements.len() {
        2 => Ok(Structure::TwoTime {
            first: 0,
            second: 1,
        }),
        4 => {
            let slots: Vec<Option<usize>> = measurements.iter().map(|m| m.slot).collect();
            if slots == vec![Some(0), Some(1), Some(0), Some(1)] {
                Ok(Structure::Ewf {
                    friend_c: 0,
                    friend_d: 1,
                    super_a: 2,
                    super_b: 3,
                })
            } else {
                Err(CliError::validation(
                    "four measurement sets must carry slots [first factor, second factor, \
                     first factor, second factor] to form an EWF scenario",
                ))
            }
        }
        n => Err(CliError::validation(format!(
            "expected 2 measurement sets (two-time) or 4 (EWF), found {n}"
        ))),
    }
}

/// Builds the runtime context: builtin first (when referenced), then
/// explicit sections override.
pub fn context_from_document(
    doc: &ScenarioDoc,
    registry: &BuiltinRegistry,
) -> CliResult<ScenarioContext> {
    let state_doc = doc.state.clone().unwrap_or_default();

    let mut params: ParamMap = doc.params.clone().unwrap_or_default();
    if let Some(extra) = &state_doc.params {
        params.extend(extra.clone());
    }

    let mut ctx = if let Some(builtin_name) = &state_doc.builtin {
        let builtin = registry.get(builtin_name)?;
        builtin.build(&params)?
    } else {
        // skeleton filled from explicit sections below
        ScenarioContext {
            name: String::new(),
            space: CompositeSpace::new(vec![("S".into(), 1)])?,
            initial: DensityOperator::new(CMatrix::identity(1), "S", vec![1], VALIDATION_TOL)?,
            pure: None,
            evolution: Evolution::identity(1, 0.0, 1.0),
            measurements: Vec::new(),
            structure: Structure::TwoTime {
                first: 0,
                second: 1,
            },
            params: params.clone(),
            builtin: None,
            bong: None,
            checks: Vec::new(),
        }
    };

    if let Some(name) = &doc.name {
        ctx.name = name.clone();
    }

    let explicit_space = doc
        .space
        .as_ref()
        .map(|s| CompositeSpace::new(s.factors.iter().map(|f| (f.label.clone(), f.dim)).collect()));

    let explicit_state = if state_doc.pure.is_some() || state_doc.density.is_some() {
        Some(state_doc.clone())
    } else {
        None
    };

    // determine the working space: explicit, else builtin's, else inferred
    // from the state dimension as a single factor
    if let Some(space) = explicit_space {
        ctx.space = space?;
    } else if ctx.builtin.is_none() {
        let dim =
            match &explicit_state {
                Some(StateDoc { pure: Some(p), .. }) => p.len(),
                Some(StateDoc {
                    density: Some(d), ..
                }) => d.len(),
                _ => return Err(CliError::validation(
                    "scenario must provide a state (pure amplitudes, density matrix, or builtin)",
                )),
            };
        ctx.space = CompositeSpace::new(vec![("S".into(), dim)])?;
    }

    if let Some(state) = explicit_state {
        let label = ctx
            .space
            .factors()
            .iter()
            .map(|(l, _)| l.as_str())
            .collect::<Vec<_>>()
            .join("x");
        if let Some(pure) = &state.pure {
            let vector = vector_from_doc(pure, "state.pure")?;
            let pure_state = PureState::new(vector, ctx.space.dims())?;
            ctx.initial = pure_state.to_density(label);
            ctx.pure = Some(pure_state);
        } else if let Some(density) = &state.density {
            let matrix = matrix_from_doc(density, "state.density")?;
            ctx.initial = DensityOperator::new(matrix, label, ctx.space.dims(), VALIDATION_TOL)?;
            ctx.pure = None;
        }
    } else if ctx.builtin.is_none() {
        return Err(CliError::validation(
            "scenario must provide a state (pure amplitudes, density matrix, or builtin)",
        ));
    }

    if let Some(evolution) = &doc.evolution {
        let dim = ctx.space.total_dim();
        ctx.evolution = match evolution {
            EvolutionDoc::Named(name) if name == "identity" => Evolution::identity(dim, 0.0, 1.0),
            EvolutionDoc::Named(other) => {
                return Err(CliError::validation(format!(
                "unknown evolution `{other}` (expected \"identity\", a unitary, or a hamiltonian)"
            )))
            }
            EvolutionDoc::Unitary { unitary } => {
                Evolution::from_unitary(matrix_from_doc(unitary, "evolution.unitary")?, 0.0, 1.0)?
            }
            EvolutionDoc::Hamiltonian { hamiltonian, dt } => Evolution::from_hamiltonian(
                matrix_from_doc(hamiltonian, "evolution.hamiltonian")?,
                0.0,
                *dt,
            )?,
        };
    } else if ctx.builtin.is_none() {
        ctx.evolution = Evolution::identity(ctx.space.total_dim(), 0.0, 1.0);
    }

    if let Some(measurements) = &doc.measurements {
        let mut sets = Vec::with_capacity(measurements.len());
        for m in measurements {
            let slot = match &m.slot {
                None => None,
                Some(label) => Some(ctx.space.slot_of(label).ok_or_else(|| {
                    CliError::validation(format!(
                        "measurement `{}` references unknown factor `{label}`",
                        m.name
                    ))
                })?),
            };
            let expected_dim = match slot {
                None => ctx.space.total_dim(),
                Some(s) => ctx.space.factor_dim(s)?,
            };
            sets.push(NamedSet {
                name: m.name.clone(),
                slot,
                set: build_set(m, expected_dim)?,
            });
        }
        ctx.structure = infer_structure(&sets)?;
        ctx.measurements = sets;
    } else if ctx.builtin.is_none() {
        return Err(CliError::validation("scenario must declare measurements"));
    }

    // dimensional consistency across sections
    if ctx.initial.dim() != ctx.space.total_dim() {
        return Err(CliError::validation(format!(
            "state dimension {} does not match space dimension {}",
            ctx.initial.dim(),
            ctx.space.total_dim()
        )));
    }
    if ctx.evolution.dim() != ctx.space.total_dim() {
        return Err(CliError::validation(format!(
            "evolution dimension {} does not match space dimension {}",
            ctx.evolution.dim(),
            ctx.space.total_dim()
        )));
    }

    if let Some(checks) = &doc.checks {
        ctx.checks = checks.iter().cloned().map(CheckSpec::from).collect();
    }
    if ctx.checks.is_empty() {
        ctx.checks = vec![CheckSpec::named("total-law")];
    }
    if ctx.name.is_empty() {
        ctx.name = ctx
            .builtin
            .clone()
            .unwrap_or_else(|| "scenario".to_string());
    }
    // builtin-built contexts already echo their fully resolved parameters
    // (defaults included); plain documents keep what they declared
    if ctx.builtin.is_none() {
        ctx.params = params;
    }

    Ok(ctx)
}
