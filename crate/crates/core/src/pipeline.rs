//! Pipeline engine: ordered stages that each read named columns and append one.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::annotation::{Annotation, AnnotationKind, CharText, Record, ERRORS_COLUMN, TEXT_COLUMN};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputColumn {
    pub name: String,
    /// Expected annotation kind; `None` accepts anything (and is used for `text`).
    pub kind: Option<AnnotationKind>,
}

impl InputColumn {
    pub fn new(name: impl Into<String>, kind: AnnotationKind) -> Self {
        InputColumn {
            name: name.into(),
            kind: Some(kind),
        }
    }

    pub fn text() -> Self {
        InputColumn {
            name: TEXT_COLUMN.to_string(),
            kind: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageSpec {
    pub name: String,
    pub input_columns: Vec<InputColumn>,
    pub output_column: String,
    pub produces: AnnotationKind,
}

impl StageSpec {
    pub fn new(
        name: impl Into<String>,
        input_columns: Vec<InputColumn>,
        output_column: impl Into<String>,
        produces: AnnotationKind,
    ) -> Self {
        StageSpec {
            name: name.into(),
            input_columns,
            output_column: output_column.into(),
            produces,
        }
    }

    /// Column name of the `i`-th declared input.
    pub fn input(&self, i: usize) -> &str {
        &self.input_columns[i].name
    }
}

/// Renaming helpers shared by every concrete stage.
pub trait StageBuilder: Sized {
    fn spec_mut(&mut self) -> &mut StageSpec;

    fn with_name(mut self, name: &str) -> Self {
        self.spec_mut().name = name.to_string();
        self
    }

    /// Renames the input columns in declaration order; extra names are ignored.
    fn with_inputs(mut self, names: &[&str]) -> Self {
        for (col, name) in self.spec_mut().input_columns.iter_mut().zip(names) {
            col.name = name.to_string();
        }
        self
    }

    fn with_output(mut self, name: &str) -> Self {
        self.spec_mut().output_column = name.to_string();
        self
    }
}

/// A fitted or fixed stage. Implementations must be pure functions of the record.
pub trait Transformer: Send + Sync {
    fn spec(&self) -> &StageSpec;
    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>>;
}

/// A stage that must be trained before it can annotate.
pub trait Estimator: Send + Sync {
    fn spec(&self) -> &StageSpec;
    fn fit(&self, dataset: &[Record]) -> Result<Arc<dyn Transformer>>;
}

#[derive(Clone)]
pub enum Stage {
    Fixed(Arc<dyn Transformer>),
    Trainable(Arc<dyn Estimator>),
}

impl Stage {
    pub fn fixed<T: Transformer + 'static>(t: T) -> Self {
        Stage::Fixed(Arc::new(t))
    }

    pub fn trainable<E: Estimator + 'static>(e: E) -> Self {
        Stage::Trainable(Arc::new(e))
    }

    pub fn spec(&self) -> &StageSpec {
        match self {
            Stage::Fixed(t) => t.spec(),
            Stage::Trainable(e) => e.spec(),
        }
    }
}

impl fmt::Debug for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Fixed(t) => write!(f, "Fixed({})", t.spec().name),
            Stage::Trainable(e) => write!(f, "Trainable({})", e.spec().name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationError {
    MissingInput {
        stage: String,
        column: String,
    },
    DuplicateOutput {
        stage: String,
        column: String,
    },
    WrongKind {
        stage: String,
        column: String,
        expected: AnnotationKind,
        found: AnnotationKind,
    },
    OutputIsInput {
        stage: String,
        column: String,
    },
    ReservedOutput {
        stage: String,
        column: String,
    },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::MissingInput { stage, column } => {
                write!(f, "stage '{stage}': missing input column '{column}'")
            }
            ValidationError::DuplicateOutput { stage, column } => {
                write!(f, "stage '{stage}': duplicate output column '{column}'")
            }
            ValidationError::WrongKind {
                stage,
                column,
                expected,
                found,
            } => write!(
                f,
                "stage '{stage}': column '{column}' has kind {found}, expected {expected}"
            ),
            ValidationError::OutputIsInput { stage, column } => {
                write!(f, "stage '{stage}': output column '{column}' is also an input")
            }
            ValidationError::ReservedOutput { stage, column } => {
                write!(f, "stage '{stage}': output column '{column}' is reserved")
            }
        }
    }
}

/// Checks the dependency rules over stage specs. `provided` lists columns the
/// input records already carry besides `text`.
pub fn validate_specs<'a, I>(specs: I, provided: &[InputColumn]) -> Vec<ValidationError>
where
    I: IntoIterator<Item = &'a StageSpec>,
{
    let mut available: HashMap<&str, Option<AnnotationKind>> = HashMap::new();
    available.insert(TEXT_COLUMN, None);
    for p in provided {
        available.insert(&p.name, p.kind);
    }
    let mut errors = Vec::new();
    for spec in specs {
        for input in &spec.input_columns {
            match available.get(input.name.as_str()) {
                None => errors.push(ValidationError::MissingInput {
                    stage: spec.name.clone(),
                    column: input.name.clone(),
                }),
                Some(found) => {
                    if let (Some(expected), Some(found)) = (input.kind, *found) {
                        if expected != found {
                            errors.push(ValidationError::WrongKind {
                                stage: spec.name.clone(),
                                column: input.name.clone(),
                                expected,
                                found,
                            });
                        }
                    }
                }
            }
        }
        let out = spec.output_column.as_str();
        if out == ERRORS_COLUMN {
            errors.push(ValidationError::ReservedOutput {
                stage: spec.name.clone(),
                column: out.to_string(),
            });
        } else if spec.input_columns.iter().any(|i| i.name == out) {
            errors.push(ValidationError::OutputIsInput {
                stage: spec.name.clone(),
                column: out.to_string(),
            });
        } else if available.contains_key(out) {
            errors.push(ValidationError::DuplicateOutput {
                stage: spec.name.clone(),
                column: out.to_string(),
            });
        }
        available.insert(out, Some(spec.produces));
    }
    errors
}

/// Looks up a stage's `i`-th input column in a record.
pub fn input_column<'r>(record: &'r Record, spec: &StageSpec, i: usize) -> Result<&'r [Annotation]> {
    let name = spec.input(i);
    record
        .column(name)
        .ok_or_else(|| Error::Data(format!("record '{}' has no column '{}'", record.id, name)))
}

#[derive(Clone, Debug, Default)]
pub struct Pipeline {
    pub stages: Vec<Stage>,
    pub provided: Vec<InputColumn>,
}

impl Pipeline {
    pub fn new(stages: Vec<Stage>) -> Self {
        Pipeline {
            stages,
            provided: Vec::new(),
        }
    }

    /// Declares columns that input records already carry (e.g. CoNLL-derived data).
    pub fn with_provided(mut self, provided: Vec<InputColumn>) -> Self {
        self.provided = provided;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<ValidationError>> {
        let errors = validate_specs(self.stages.iter().map(Stage::spec), &self.provided);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Trains every trainable stage in order on the dataset as transformed by
    /// the stages before it.
    pub fn fit(&self, dataset: &[Record]) -> Result<PipelineModel> {
        self.validate().map_err(Error::InvalidPipeline)?;
        let last_trainable = self
            .stages
            .iter()
            .rposition(|s| matches!(s, Stage::Trainable(_)));
        let mut current: Option<Vec<Record>> = None;
        let mut fitted: Vec<Arc<dyn Transformer>> = Vec::with_capacity(self.stages.len());
        for (i, stage) in self.stages.iter().enumerate() {
            let transformer = match stage {
                Stage::Fixed(t) => t.clone(),
                Stage::Trainable(e) => {
                    let data = current.as_deref().unwrap_or(dataset);
                    let t = e.fit(data).map_err(|err| err.in_stage(&e.spec().name))?;
                    if t.spec().output_column != e.spec().output_column {
                        return Err(Error::Config(format!(
                            "stage '{}' changed its output column while fitting",
                            e.spec().name
                        )));
                    }
                    t
                }
            };
            if last_trainable.is_some_and(|last| i < last) {
                let records = current.take().unwrap_or_else(|| dataset.to_vec());
                current = Some(
                    records
                        .into_iter()
                        .map(|mut r| {
                            apply_stage(transformer.as_ref(), &mut r, false);
                            r
                        })
                        .collect(),
                );
            }
            fitted.push(transformer);
        }
        PipelineModel::new(fitted, self.provided.clone())
    }
}

/// Runs one stage on a record; returns false if it failed (the failure is
/// recorded in the errors column).
fn apply_stage(stage: &dyn Transformer, record: &mut Record, check: bool) -> bool {
    let spec = stage.spec();
    match stage.annotate(record) {
        Ok(annotations) => {
            if check {
                let text = CharText::new(&record.text);
                for a in &annotations {
                    if let Err(e) = a.check(&text) {
                        panic!("stage '{}' produced an invalid annotation: {}", spec.name, e);
                    }
                }
            }
            record.columns.insert(spec.output_column.clone(), annotations);
            true
        }
        Err(e) => {
            record.push_error(&spec.name, e.to_string());
            false
        }
    }
}

/// Immutable sequence of appliable stages; safe to share across workers.
#[derive(Clone)]
pub struct PipelineModel {
    stages: Vec<Arc<dyn Transformer>>,
    provided: Vec<InputColumn>,
    /// Check every produced annotation against its invariants (panics on violation).
    pub check_annotations: bool,
}

impl fmt::Debug for PipelineModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.stage_names()).finish()
    }
}

impl PipelineModel {
    pub fn new(stages: Vec<Arc<dyn Transformer>>, provided: Vec<InputColumn>) -> Result<Self> {
        let errors = validate_specs(stages.iter().map(|s| s.spec()), &provided);
        if !errors.is_empty() {
            return Err(Error::InvalidPipeline(errors));
        }
        Ok(PipelineModel {
            stages,
            provided,
            check_annotations: cfg!(debug_assertions),
        })
    }

    pub fn stages(&self) -> &[Arc<dyn Transformer>] {
        &self.stages
    }

    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.spec().name.as_str()).collect()
    }

    pub fn provided(&self) -> &[InputColumn] {
        &self.provided
    }

    /// Appends one column per stage. A failing stage records an error and
    /// skips the remaining stages for that record.
    pub fn transform_record(&self, mut record: Record) -> Record {
        for stage in &self.stages {
            if !apply_stage(stage.as_ref(), &mut record, self.check_annotations) {
                break;
            }
        }
        record
    }

    pub fn transform(&self, records: Vec<Record>) -> Vec<Record> {
        records.into_iter().map(|r| self.transform_record(r)).collect()
    }

    /// Same output as [`transform`](Self::transform), computed on `workers` threads.
    pub fn transform_parallel(&self, records: Vec<Record>, workers: usize) -> Result<Vec<Record>> {
        self.map_parallel(records, workers, |r| r)
    }

    /// Transforms each record on `workers` threads and maps it through `f`,
    /// keeping input order.
    pub fn map_parallel<T, F>(&self, records: Vec<Record>, workers: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Record) -> T + Sync,
    {
        if workers <= 1 {
            return Ok(records.into_iter().map(|r| f(self.transform_record(r))).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
        Ok(pool.install(|| {
            records
                .into_par_iter()
                .map(|r| f(self.transform_record(r)))
                .collect()
        }))
    }
}
