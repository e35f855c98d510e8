//! Prints the jamming sweep matrix with 3-seed majority voting, for tuning
//! against the expected staircase pattern.

use aebsim::monitors::Outcome;
use aebsim::runner::run_sweep;
use aebsim::scenarios::load_sweep;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("normal");
    let (mn, doc) = match which {
        "fa" => ((2, 2), aebsim::fixtures::JAMMING_SWEEP_FALSE_ALARM),
        "912" => ((9, 12), aebsim::fixtures::JAMMING_SWEEP),
        _ => ((2, 2), aebsim::fixtures::JAMMING_SWEEP),
    };
    let mut grid = load_sweep(doc).unwrap();
    grid.base.ego.tracker.m_confirm = mn.0;
    grid.base.ego.tracker.n_window = mn.1;
    grid.base.ego.tracker.miss_delete = mn.1;

    let seeds = [1u64, 2, 3];
    let results: Vec<_> = seeds
        .iter()
        .map(|&s| run_sweep(&grid, 8, s).unwrap())
        .collect();

    let shape = results[0].shape();
    println!("rows: {:?}", grid.axes[0].values);
    println!("cols: {:?}", grid.axes[1].values);
    for i in 0..shape[0] {
        let mut row = String::new();
        for j in 0..shape[1] {
            let crashes = results
                .iter()
                .filter(|r| *r.outcome_at(&[i, j]) == Outcome::Crash)
                .count();
            let sts = results
                .iter()
                .filter(|r| *r.outcome_at(&[i, j]) == Outcome::StoppedTooSoon)
                .count();
            let token = if crashes >= 2 {
                'C'
            } else if sts >= 2 {
                'T'
            } else {
                '.'
            };
            row.push(token);
            row.push_str(&format!(
                "({crashes}{})",
                if sts > 0 {
                    format!("/t{sts}")
                } else {
                    String::new()
                }
            ));
            row.push(' ');
        }
        println!("d={:>4}: {row}", grid.axes[0].values[i]);
    }
}
