use std::sync::Arc;

use super::{FibreOracle, FibrePoint};
use crate::chains::BoxPoint;
use crate::error::Result;
use crate::groups::GroupElement;
use crate::hilbert::{AffineIsometry, BasisKey, LinearOp, LinearPart};

/// Wraps an oracle and composes exactly one trivialization `t_{C*}(x*)`
/// with a reflection. Used to exercise the overlap verifier.
#[derive(Debug)]
pub struct ReflectedOracle {
    inner: Arc<dyn FibreOracle>,
    level: u32,
    subset: Vec<GroupElement>,
    point: GroupElement,
    key: BasisKey,
}

impl ReflectedOracle {
    pub fn new(
        inner: Arc<dyn FibreOracle>,
        level: u32,
        mut subset: Vec<GroupElement>,
        point: GroupElement,
        key: BasisKey,
    ) -> Self {
        subset.sort();
        ReflectedOracle { inner, level, subset, point, key }
    }
}

impl FibreOracle for ReflectedOracle {
    fn describe(&self) -> String {
        format!("reflected[{} at {}@{}]", self.inner.describe(), self.point, self.level)
    }

    fn fibre_base(&self, level: u32, x: &GroupElement) -> Result<BoxPoint> {
        self.inner.fibre_base(level, x)
    }

    fn section(&self, level: u32, x: &GroupElement) -> Result<FibrePoint> {
        self.inner.section(level, x)
    }

    fn chart(&self, level: u32, c: &[GroupElement], x: &GroupElement) -> Result<AffineIsometry> {
        let t = self.inner.chart(level, c, x)?;
        let mut sorted = c.to_vec();
        sorted.sort();
        if level == self.level && x == &self.point && sorted == self.subset {
            let reflect = AffineIsometry::new(
                LinearPart::from_ops(vec![LinearOp::Reflect(self.key.clone())]),
                Default::default(),
            );
            return Ok(reflect.compose(&t));
        }
        Ok(t)
    }
}
