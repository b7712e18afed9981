use kamtori::coeff::C64;
use kamtori::engine::{run, RunConfig};
use kamtori::report::Record;
use std::time::Instant;

fn main() {
    let window: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let mut cfg = RunConfig::desk(2.5, window);
    cfg.seed = 42;
    let t0 = Instant::now();
    let report = run::<C64>(&cfg).unwrap();
    println!("elapsed: {:?}", t0.elapsed());
    for r in &report.records {
        match r {
            Record::Init(i) => println!(
                "init: eps_used={:.3e} eps0={:.3e} r0={:.3e} r1={:.3e} r2={:.3e} shift0={:.3e} terms={}",
                i.eps_used, i.eps0, i.r0_norm, i.r1_norm, i.r2_norm, i.init_shift_sup, i.sextic_terms
            ),
            Record::Step(s) => println!(
                "step {}: r0 {:.3e}->{:.3e} (tgt {:.3e}) r1 {:.3e}->{:.3e} r2 {:.3e}->{:.3e} shift={:.3e} (bd {:.3e}) D*={:?} solved={}ant+{} def={} dropP={} orders={:?} c_ok={} ok[r0={} r1={} r2={} sh={}]",
                s.s, s.r0_before, s.r0_after, s.r0_before.powf(1.4), s.r1_before, s.r1_after,
                s.r2_before, s.r2_after, s.shift_sup, s.shift_bound, s.worst_divisor,
                s.solved_r0, s.solved_r1, s.deferred_count, s.dropped.capped_pairs,
                s.lie_perturbation_tail.map(|t| t.orders_used),
                s.contract_ok, s.contract_r0_ok, s.contract_r1_ok, s.contract_r2_ok, s.shift_ok
            ),
            Record::Outer(o) => println!("outer {}: residual {:.3e}", o.outer, o.residual),
            Record::Torus(t) => println!("torus: residual {:.3e} bound {:.3e} pass={}", t.residual, t.bound, t.pass),
            Record::Final(f) => println!("final: status={} steps={} freeze_res={:?}", f.status, f.steps_completed, f.freeze_residual),
            _ => {}
        }
    }
}
