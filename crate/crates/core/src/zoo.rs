//! placeholder

use rand::Rng;

use crate::qobj::{Alphabets, ClassicalSuperchannel};

/// Sample a classical superchannel with Dirichlet-ish random tables.
pub fn random_classical_superchannel(al: Alphabets, rng: &mut impl Rng) -> ClassicalSuperchannel {
    let mut e = vec![vec![vec![0.0; al.s]; al.a]; al.c];
    for c in 0..al.c {
        let mut sum = 0.0;
        for a in 0..al.a {
            for s in 0..al.s {
                let v: f64 = rng.random::<f64>().max(1e-9);
                e[c][a][s] = v;
                sum += v;
            }
        }
        for a in 0..al.a {
            for s in 0..al.s {
                e[c][a][s] /= sum;
            }
        }
    }
    let mut d = vec![vec![vec![0.0; al.d]; al.s]; al.b];
    for b in 0..al.b {
        for s in 0..al.s {
            let mut sum = 0.0;
            for dd in 0..al.d {
                let v: f64 = rng.random::<f64>().max(1e-9);
                d[b][s][dd] = v;
                sum += v;
            }
            for dd in 0..al.d {
                d[b][s][dd] /= sum;
            }
        }
    }
    ClassicalSuperchannel::new(e, d, al).unwrap()
}

use crate::qobj::{tensor, Channel, CombWires, State, Superchannel};
use crate::Result;

/// Replacer superchannel: maps every slot channel `N: A -> B` to the fixed
/// channel `r`. The slot input is fed the maximally mixed dummy state and
/// discarded; the comb input rides the side wire into `r`.
pub fn make_replacer(r: &Channel) -> Result<Superchannel> {
    make_replacer_with_slot(r, r.dim_in(), r.dim_in())
}

/// Replacer with an explicit slot signature `A -> B`.
pub fn make_replacer_with_slot(r: &Channel, dim_a: usize, dim_b: usize) -> Result<Superchannel> {
    let tau = State::maximally_mixed(dim_a);
    let pre = tensor(&Channel::prepare(&tau), &Channel::identity(r.dim_in()))?;
    let post = tensor(&Channel::trace_out(dim_b), r)?;
    Superchannel::from_parts(
        pre,
        post,
        CombWires {
            c: r.dim_in(),
            a: vec![dim_a],
            b: vec![dim_b],
            s: vec![r.dim_in()],
            d: r.dim_out(),
        },
    )
}
