use fairmix_core::monte_carlo::MIN_SAMPLES;
use fairmix_core::report::read_grid_csv;
use fairmix_core::{default_grid, validate_formula, ValidationPoint, ValidationReport};

use crate::config::ValidateConfig;
use crate::error::CliError;

pub fn load_grid(cfg: &ValidateConfig) -> Result<Vec<ValidationPoint>, CliError> {
    match &cfg.grid {
        None => Ok(default_grid()),
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let grid =
                read_grid_csv(file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if grid.is_empty() {
                return Err(CliError::Config(format!("{}: grid has no rows", path.display())));
            }
            Ok(grid)
        }
    }
}

pub fn run_validation(cfg: &ValidateConfig) -> Result<Vec<ValidationReport>, CliError> {
    if cfg.n < MIN_SAMPLES {
        return Err(CliError::Config(format!("`n` must be at least {MIN_SAMPLES}")));
    }
    if !(cfg.multiplier.is_finite() && cfg.multiplier > 0.0) {
        return Err(CliError::Config("`multiplier` must be positive".into()));
    }
    let grid = load_grid(cfg)?;
    Ok(validate_formula(&grid, cfg.n, cfg.multiplier, cfg.seed))
}
