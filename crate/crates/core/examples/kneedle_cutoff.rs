//! Finds the knee of descending score lists and truncates them there.

use ontotopics::selection::{detect_knee, kneedle_cutoff, SelectionParams};

fn main() {
    let params = SelectionParams {
        min_topics: 0,
        ..SelectionParams::default()
    };
    let curves: [(&str, &[f64]); 4] = [
        ("sharp drop", &[10.0, 9.5, 9.2, 2.0, 1.8, 1.7, 1.6]),
        ("long tail", &[9.0, 4.0, 2.2, 1.5, 1.2, 1.1, 1.0, 0.95]),
        ("gentle decay", &[8.0, 7.9, 7.7, 7.4, 7.0, 4.0, 1.0]),
        ("flat", &[3.0, 3.0, 3.0, 3.0]),
    ];
    for (name, scores) in curves {
        let knee = detect_knee(scores, params.kneedle_sensitivity);
        let keep = kneedle_cutoff(scores, &params);
        println!(
            "{name:<13} knee {knee:?} keep {keep}: {:?}",
            &scores[..keep]
        );
    }
}
