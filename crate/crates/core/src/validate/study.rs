use crate::error::Result;
use crate::mor::{build_rom, ReducedModel, RomBuildOptions};
use crate::netmodel::SecondOrderModel;
use crate::scalar::Real;
use crate::validate::sweep::{sweep, SweepOptions};

#[derive(Debug, Clone)]
pub struct StudyRow<T> {
    pub requested_order: usize,
    pub actual_r: usize,
    pub median_rel_hinf: T,
    pub max_rel_hinf: T,
}

#[derive(Debug, Clone)]
pub struct StudyTable<T> {
    pub rows: Vec<StudyRow<T>>,
}

impl<T: Real> StudyTable<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# gridmor {} convergence study\n", crate::VERSION));
        s.push_str("requested_order,actual_r,median_rel_hinf,max_rel_hinf\n");
        for row in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                row.requested_order, row.actual_r, row.median_rel_hinf, row.max_rel_hinf
            ));
        }
        s
    }
}

/// Run the full pipeline (reduce + sweep) once per requested local order and
/// tabulate median/max sweep errors. Trends are reported, not asserted.
/// Returns the table together with the reduced model of the last order.
pub fn convergence_study<T: Real>(
    model: &SecondOrderModel<T>,
    samples: &[Vec<T>],
    orders: &[usize],
    rom_opts: &RomBuildOptions<T>,
    sweep_opts: &SweepOptions<T>,
) -> Result<(StudyTable<T>, Option<ReducedModel<T>>)> {
    let mut seen = std::collections::BTreeSet::new();
    let mut unique = Vec::new();
    for &r in orders {
        if seen.insert(r) {
            unique.push(r);
        } else {
            log::warn!("duplicate study order {r} skipped");
        }
    }
    let mut rows = Vec::with_capacity(unique.len());
    let mut last = None;
    for order in unique {
        let mut opts = rom_opts.clone();
        opts.orders = vec![order];
        let build = build_rom(model, samples, &opts)?;
        let report = sweep(model, &build.rom, sweep_opts)?;
        rows.push(StudyRow {
            requested_order: order,
            actual_r: build.rom.order(),
            median_rel_hinf: report.median_rel_hinf(),
            max_rel_hinf: report.max_rel_hinf(),
        });
        last = Some(build.rom);
    }
    Ok((StudyTable { rows }, last))
}
