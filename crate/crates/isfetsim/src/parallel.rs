//! Rows of a sweep spread over scoped threads.
//!
//! Rows are independent and pure, so the assembled grid is bit-identical to
//! a sequential run whatever the thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use isfetsim_core::analysis::{SweepPlan, SweepPoint, SweepResult};
use isfetsim_core::solver::SolverConfig;

pub fn default_jobs() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn solve_plan(plan: &SweepPlan<'_>, config: &SolverConfig, jobs: usize) -> SweepResult {
    let rows = plan.row_count();
    let jobs = jobs.clamp(1, rows.max(1));
    if jobs == 1 {
        return plan.finish((0..rows).map(|r| plan.solve_row(config, r)).collect());
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Vec<SweepPoint>>> = vec![None; rows];
    thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let r = next.fetch_add(1, Ordering::Relaxed);
                        if r >= rows {
                            break done;
                        }
                        done.push((r, plan.solve_row(config, r)));
                    }
                })
            })
            .collect();
        for w in workers {
            for (r, pts) in w.join().expect("sweep worker panicked") {
                slots[r] = Some(pts);
            }
        }
    });
    plan.finish(
        slots
            .into_iter()
            .map(|s| s.expect("every row solved"))
            .collect(),
    )
}
