// debug harness
use conetrace::models;
use conetrace::heat::{heat_expansion, heat_expansion_via_traces};

fn main() {
    let model = models::m2();
    let q = model.q_family().unwrap();
    let lau = heat_expansion(&q, model.calculus.horizon).unwrap();
    println!("LAURENT terms:");
    for t in &lau.terms {
        println!("  e={:+.4} j={} c={:+.8}", t.exponent.re, t.log_power, t.coeff.re);
    }
    let via = heat_expansion_via_traces(&model.p_family, &model.operator, model.calculus.horizon, model.calculus.truncation).unwrap();
    println!("VIA-TRACES terms:");
    for t in &via.terms {
        println!("  e={:+.4} j={} c={:+.8}", t.exponent.re, t.log_power, t.coeff.re);
    }
}
