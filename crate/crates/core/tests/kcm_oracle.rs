//! Simulated laws of `ω(t)` against exact transition probabilities.

use std::sync::Arc;

use kcm_lab::exact::{GeneratorOperator, State, GENERATOR_CAP};
use kcm_lab::kcm::{default_exterior, evolve, kcm_box, SimParams};
use kcm_lab::{Configuration, UpdateFamily};
use rayon::prelude::*;

/// Row `start` of `e^{tL}` by uniformization.
fn transition_row(gen: &GeneratorOperator, start: usize, t: f64) -> Vec<f64> {
    let n = gen.dim();
    let rate = (0..n).map(|i| gen.out_rate(i)).fold(0.0, f64::max).max(1e-12);
    let mut p = vec![0.0; n];
    p[start] = 1.0;
    let mut out = vec![0.0; n];
    let mut weight = (-rate * t).exp();
    let mut mass = 0.0;
    let mut k = 0;
    while 1.0 - mass > 1e-13 {
        for (o, v) in out.iter_mut().zip(&p) {
            *o += weight * v;
        }
        mass += weight;
        // one step of P = I + L/Λ
        let mut next: Vec<f64> = (0..n).map(|i| p[i] * (1.0 - gen.out_rate(i) / rate)).collect();
        for i in 0..n {
            for (j, r) in gen.row(i) {
                next[j] += p[i] * r / rate;
            }
        }
        p = next;
        k += 1;
        weight *= rate * t / k as f64;
        assert!(k < 10_000, "uniformization did not converge");
    }
    out
}

fn state_of(config: &Configuration) -> State {
    config.bits().iter().enumerate().fold(0, |s, (i, &b)| s | (b as State) << i)
}

fn total_variation(family: &str, width: u32, height: u32, q: f64, t: f64, runs: u64) -> f64 {
    let f = UpdateFamily::builtin(family).unwrap();
    let region = kcm_box(width, height).unwrap();
    let exterior = default_exterior(&f, &region);
    let gen = GeneratorOperator::build(&f, &region, &exterior, q, GENERATOR_CAP).unwrap();
    let region = Arc::new(region);
    let params = SimParams {
        family: f,
        q,
        region: region.clone(),
        exterior: exterior.clone(),
        t_max: t,
        seed: 31,
        trial: 0,
    };
    let start = Configuration::filled(region, 1, exterior).unwrap();
    let exact = transition_row(&gen, gen.space().index_of(state_of(&start)).unwrap(), t);
    let counts = (0..runs)
        .into_par_iter()
        .fold(
            || vec![0u64; gen.dim()],
            |mut c, trial| {
                let end = evolve(&params.with_trial(trial), &start, t).unwrap();
                c[gen.space().index_of(state_of(&end)).unwrap()] += 1;
                c
            },
        )
        .reduce(|| vec![0u64; gen.dim()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    0.5 * counts
        .iter()
        .zip(&exact)
        .map(|(&c, &p)| (c as f64 / runs as f64 - p).abs())
        .sum::<f64>()
}

#[test]
fn uniformization_matches_two_state_chain() {
    // one free site: P(empty at t | occupied at 0) = q(1 − e^{−t})
    let f = UpdateFamily::builtin("east1d").unwrap();
    let region = kcm_box(1, 1).unwrap();
    let ext = default_exterior(&f, &region);
    let gen = GeneratorOperator::build(&f, &region, &ext, 0.3, GENERATOR_CAP).unwrap();
    let row = transition_row(&gen, gen.space().index_of(1).unwrap(), 0.7);
    let expected = 0.3 * (1.0 - (-0.7f64).exp());
    assert!((row[gen.space().index_of(0).unwrap()] - expected).abs() < 1e-12);
}

#[test]
fn east_chain_law_at_fixed_time() {
    let tv = total_variation("east1d", 6, 1, 0.3, 2.0, 100_000);
    println!("east1d L=6 q=0.3 t=2: TV = {tv:.4}");
    assert!(tv < 0.02, "{tv}");
}

#[test]
fn east2d_box_law_at_fixed_time() {
    let tv = total_variation("east2d", 3, 2, 0.4, 1.5, 100_000);
    println!("east2d 3x2 q=0.4 t=1.5: TV = {tv:.4}");
    assert!(tv < 0.02, "{tv}");
}

#[test]
fn duarte_box_law_at_fixed_time() {
    let tv = total_variation("duarte", 2, 3, 0.4, 1.0, 100_000);
    println!("duarte 2x3 q=0.4 t=1: TV = {tv:.4}");
    assert!(tv < 0.02, "{tv}");
}
