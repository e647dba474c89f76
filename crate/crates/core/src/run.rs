//! Turning a [`RunConfig`] into a solver run that writes snapshots and a
//! diagnostics CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{BedSpec, GridSpec, InitialSpec, ReconstructionSpec, RunConfig};
use crate::diagnostics::{DiagnosticRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::{Grid, Grid1D, Grid2D, SphereGrid};
use crate::initial::Bathymetry;
use crate::nn::load_weights;
use crate::snapshot::{read_snapshot, write_snapshot, Snapshot};
use crate::solver::{NoOutput, Observer, Reconstruction, RunState, Solver};
use crate::state::State;

pub fn build_grid(spec: &GridSpec, radius: f64) -> Result<Grid> {
    Ok(match *spec {
        GridSpec::Line { nx, x_min, x_max } => Grid::Line(Grid1D::new(x_min, x_max, nx)?),
        GridSpec::Plane { nx, ny, x, y } => Grid::Plane(Grid2D::new(x, y, nx, ny)?),
        GridSpec::Sphere { nx, ny } => Grid::Sphere(Arc::new(SphereGrid::build(nx, ny, radius)?)),
    })
}

/// A solver and its initial cells, ready to run.
pub struct Prepared {
    pub solver: Solver,
    pub initial: Vec<State>,
}

/// Build the grid, bed, reconstruction and initial field of `config`.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let grid = build_grid(&config.grid, config.model.radius)?;
    let bed = match config.bed {
        BedSpec::Flat => None,
        BedSpec::Random { amplitude, seed } => Some(Bathymetry::random(&grid, amplitude, seed)?),
    };
    let load = |p: &PathBuf| -> Result<Arc<_>> {
        load_weights(p)
            .map(Arc::new)
            .map_err(|e| in_file(e, p))
    };
    let reconstruction = match &config.reconstruction {
        ReconstructionSpec::FirstOrder => Reconstruction::FirstOrder,
        ReconstructionSpec::Minmod { literal_sign } => Reconstruction::Minmod {
            literal_sign: *literal_sign,
        },
        ReconstructionSpec::Coefficients(p) => Reconstruction::Coefficients(load(p)?),
        ReconstructionSpec::BoundaryStates(p) => Reconstruction::BoundaryStates(load(p)?),
    };
    let initial = match &config.initial {
        InitialSpec::Named(ic) => ic.evaluate(&config.model, &grid, bed.as_ref().map(|b| &b.elevation[..]))?,
        InitialSpec::FromFile(p) => {
            let snap = read_snapshot(p).map_err(|e| in_file(e, p))?;
            if snap.system != config.model.system || snap.dims != grid.dims() {
                return Err(Error::config(format!(
                    "{} holds a {} field of {}x{} cells, the run needs {} on {}x{}",
                    p.display(),
                    snap.system,
                    snap.dims.0,
                    snap.dims.1,
                    config.model.system,
                    grid.dims().0,
                    grid.dims().1
                )));
            }
            snap.cells
        }
    };
    let solver = Solver::new(config.model.clone(), grid, config.flux, reconstruction)
        .with_bc(config.bc)
        .with_stepper(config.stepper)
        .with_bed(bed);
    solver.validate()?;
    Ok(Prepared { solver, initial })
}

fn in_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Format { offset, msg } => Error::Format {
            offset,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}

/// Writes `<prefix>_<step>.fvx` snapshots and `<prefix>_diagnostics.csv`
/// into one directory.
pub struct FileOutput {
    dir: PathBuf,
    prefix: String,
    system: crate::System,
    grid: Grid,
    csv: BufWriter<File>,
    written: Vec<PathBuf>,
}

impl FileOutput {
    pub fn create(dir: &Path, prefix: &str, solver: &Solver) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join(format!("{prefix}_diagnostics.csv")))?);
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(FileOutput {
            dir: dir.to_path_buf(),
            prefix: prefix.to_string(),
            system: solver.model.system,
            grid: solver.grid.clone(),
            csv,
            written: Vec::new(),
        })
    }

    pub fn snapshot_path(&self, step: u64) -> PathBuf {
        self.dir.join(format!("{}_{step:08}.fvx", self.prefix))
    }

    /// Snapshot files written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        self.csv.flush()?;
        Ok(self.written)
    }
}

impl Observer for FileOutput {
    fn diagnostics(&mut self, record: &DiagnosticRecord) -> Result<()> {
        writeln!(self.csv, "{}", record.csv_row())?;
        Ok(())
    }

    fn snapshot(&mut self, state: &RunState) -> Result<()> {
        let path = self.snapshot_path(state.steps);
        if self.written.last() == Some(&path) {
            return Ok(());
        }
        let snap = Snapshot::new(self.system, &self.grid, state.cells.clone(), state.time)?;
        write_snapshot(&snap, &path)?;
        self.csv.flush()?;
        self.written.push(path);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub state: RunState,
    pub snapshots: Vec<PathBuf>,
    pub diagnostics: PathBuf,
}

/// Execute `config`, writing into `out` (or the configured directory).
pub fn run_config(config: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    let Prepared { solver, initial } = prepare(config)?;
    let dir = out.unwrap_or(&config.output.dir);
    let mut output = FileOutput::create(dir, &config.output.prefix, &solver)?;
    let result = solver.run_with(initial, &config.control, &config.output.schedule, &mut output);
    let diagnostics = dir.join(format!("{}_diagnostics.csv", config.output.prefix));
    let snapshots = output.finish()?;
    Ok(RunSummary {
        state: result?,
        snapshots,
        diagnostics,
    })
}

/// Run `config` without writing anything.
pub fn run_in_memory(config: &RunConfig) -> Result<RunState> {
    let Prepared { solver, initial } = prepare(config)?;
    solver.run_with(initial, &config.control, &config.output.schedule, &mut NoOutput)
}
