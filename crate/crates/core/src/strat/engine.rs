//! Wire-tracking state engine: pushes a density operator through channels
//! acting on named subsystems.

use nalgebra::DMatrix;

use crate::linalg::{permute_systems, C64, Operator};
use crate::qobj::Channel;
use crate::{Error, Result};

/// A register: a density operator whose subsystems carry tags.
#[derive(Clone, Debug)]
pub(crate) struct Reg {
    op: Operator,
    tags: Vec<u64>,
}

impl Reg {
    pub fn new(op: Operator, tags: Vec<u64>) -> Result<Self> {
        if op.dims().len() != tags.len() {
            return Err(Error::dim("tag count must match subsystem count"));
        }
        Ok(Reg { op, tags })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim_of(&self, tag: u64) -> Option<usize> {
        self.tags.iter().position(|&t| t == tag).map(|p| self.op.dims()[p])
    }

    /// Apply `ch` to the subsystems listed in `in_tags` (in that order). The
    /// outputs, with tags and dims from `out_tags`, are placed in front of the
    /// untouched subsystems.
    pub fn apply(&mut self, ch: &Channel, in_tags: &[u64], out_tags: &[(u64, usize)]) -> Result<()> {
        let mut positions = Vec::with_capacity(in_tags.len());
        for t in in_tags {
            let p = self
                .tags
                .iter()
                .position(|x| x == t)
                .ok_or_else(|| Error::arg(format!("tag {t} not present")))?;
            positions.push(p);
        }
        let rest: Vec<usize> = (0..self.tags.len()).filter(|p| !positions.contains(p)).collect();
        let mut perm = positions.clone();
        perm.extend(rest.iter());
        let permuted = permute_systems(&self.op, &perm)?;
        let din: usize = positions.iter().map(|&p| self.op.dims()[p]).product();
        if din != ch.dim_in() {
            return Err(Error::dim(format!(
                "channel input {} vs tagged dims {}",
                ch.dim_in(),
                din
            )));
        }
        let dout: usize = out_tags.iter().map(|(_, d)| d).product();
        if dout != ch.dim_out() {
            return Err(Error::dim(format!(
                "channel output {} vs declared dims {}",
                ch.dim_out(),
                dout
            )));
        }
        let rest_dim: usize = rest.iter().map(|&p| self.op.dims()[p]).product();
        let flat = permuted.clone().with_dims(vec![din, rest_dim.max(1)])?;
        let mut out = DMatrix::<C64>::zeros(dout * rest_dim.max(1), dout * rest_dim.max(1));
        let id_rest = DMatrix::<C64>::identity(rest_dim.max(1), rest_dim.max(1));
        for k in ch.kraus() {
            let big = k.kronecker(&id_rest);
            out += &big * flat.matrix() * big.adjoint();
        }
        let mut dims: Vec<usize> = out_tags.iter().map(|(_, d)| *d).collect();
        let mut tags: Vec<u64> = out_tags.iter().map(|(t, _)| *t).collect();
        for &p in &rest {
            dims.push(self.op.dims()[p]);
            tags.push(self.tags[p]);
        }
        self.op = Operator::new(out, dims)?;
        self.tags = tags;
        Ok(())
    }

    /// Reorder subsystems into the given tag order. Absent tags are an error;
    /// all tags must be listed.
    pub fn sort_to(&mut self, order: &[u64]) -> Result<()> {
        if order.len() != self.tags.len() {
            return Err(Error::arg("tag order must list every subsystem"));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|t| {
                self.tags
                    .iter()
                    .position(|x| x == t)
                    .ok_or_else(|| Error::arg(format!("tag {t} not present")))
            })
            .collect::<Result<_>>()?;
        self.op = permute_systems(&self.op, &perm)?;
        self.tags = order.to_vec();
        Ok(())
    }

    /// Drop dimension-one subsystems from the metadata.
    pub fn squeeze(&mut self) {
        let keep: Vec<usize> = (0..self.tags.len())
            .filter(|&p| self.op.dims()[p] > 1)
            .collect();
        if keep.len() == self.tags.len() || keep.is_empty() {
            if keep.is_empty() {
                // fully scalar register: single trivial wire
                self.op = self.op.clone().with_dims(vec![1]).unwrap();
                self.tags = vec![u64::MAX];
            }
            return;
        }
        let dims: Vec<usize> = keep.iter().map(|&p| self.op.dims()[p]).collect();
        self.tags = keep.iter().map(|&p| self.tags[p]).collect();
        self.op = self.op.clone().with_dims(dims).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::qobj::{random_channel, random_density, seeded_rng};

    #[test]
    fn apply_on_tagged_subsystem_matches_direct() {
        let mut rng = seeded_rng(3);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let n = random_channel(3, 2, &mut rng).unwrap();
        let joint = kron(&a, &b);
        let mut reg = Reg::new(joint, vec![10, 20]).unwrap();
        reg.apply(&n, &[20], &[(20, 2)]).unwrap();
        reg.sort_to(&[10, 20]).unwrap();
        let expect = kron(&a, &n.apply_op(&b).unwrap());
        assert!(reg.op().sub(&expect).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn apply_across_two_subsystems() {
        let mut rng = seeded_rng(4);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(2, 2, &mut rng);
        let c = random_density(2, 1, &mut rng);
        let n = random_channel(4, 4, &mut rng).unwrap();
        let joint = kron(&kron(&a, &b), &c);
        let mut reg = Reg::new(joint.clone(), vec![1, 2, 3]).unwrap();
        // act on (3, 1) in swapped order
        reg.apply(&n, &[3, 1], &[(3, 2), (1, 2)]).unwrap();
        reg.sort_to(&[1, 2, 3]).unwrap();
        // direct: permute to [c, a, b], act on first two, permute back
        let perm = permute_systems(&joint, &[2, 0, 1]).unwrap();
        let big = crate::qobj::tensor(&n, &Channel::identity(2)).unwrap();
        let acted = big.apply_op(&perm.with_dims(vec![8]).unwrap()).unwrap();
        let acted = acted.with_dims(vec![2, 2, 2]).unwrap();
        let expect = permute_systems(&acted, &[1, 2, 0]).unwrap();
        assert!(reg.op().sub(&expect).unwrap().frobenius_norm() < 1e-12);
    }
}
