use super::InverseError;
use crate::forward::CbfParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct K1 {
    pub k11: f64,
    pub k12: f64,
    pub k13: f64,
}

/// Constants of the fast-growing branch `r > 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct K2 {
    pub gamma: f64,
    pub k21: f64,
    pub k22: f64,
    pub k23: f64,
    pub k24: f64,
    pub k25: f64,
    pub eta_star: f64,
}

/// Constants of the critical 3D branch `d = r = 3`, `βμ > 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct K3 {
    pub k31: f64,
    pub k32: f64,
    pub k33: f64,
    pub k34: f64,
    pub k35: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KTable {
    pub k1: K1,
    pub k2: Option<K2>,
    pub k3: Option<K3>,
}

pub fn k1(p: &CbfParams) -> K1 {
    let (r, a) = (p.r, p.alpha);
    K1 {
        k11: 4.0 + 8.0 / (r + 1.0),
        k12: 5.0 * a / 2.0 + a / (r + 1.0),
        k13: 6.0 / a + 8.0 / ((r + 1.0) * a),
    }
}

pub fn k2(p: &CbfParams) -> Result<K2, InverseError> {
    let CbfParams { mu, alpha: a, beta, r, .. } = *p;
    if !(r > 3.0) {
        return Err(InverseError::Constants(format!("K2 constants need r > 3, got r = {r}")));
    }
    let q = 2.0 / (r - 3.0);
    let gamma = (r - 3.0) / (r - 1.0) * (2.0 / (beta * (r - 1.0))).powf(q);
    Ok(K2 {
        gamma,
        k21: 4.0 + 4.0 / mu + 8.0 / (r + 1.0),
        k22: 3.0 * a / 4.0 + 3.0 * a * gamma / (32.0 * mu),
        k23: (3.5 + 1.0 / (r + 1.0) + 1.0 / (2.0 * mu)) * a + gamma / (2.0 * mu),
        k24: 3.0 / (4.0 * a) + 3.0 / (4.0 * mu) + 3.0 * gamma / (4.0 * mu * a),
        k25: (7.0 + 4.0 / (r + 1.0) + 2.0 / mu) * 2.0 / a,
        eta_star: (r - 3.0) / (mu * (r - 1.0)) * (2.0 / (beta * mu * (r - 1.0))).powf(q),
    })
}

pub fn k3(p: &CbfParams) -> Result<K3, InverseError> {
    let CbfParams { mu, alpha: a, beta, r, dim, .. } = *p;
    if dim != 3 || r != 3.0 {
        return Err(InverseError::Constants(format!("K3 constants need d = r = 3, got d = {dim}, r = {r}")));
    }
    let bm = beta * mu - 1.0;
    if !(bm > 0.0) {
        return Err(InverseError::Constants(format!("K3 constants need βμ > 1, got βμ = {}", beta * mu)));
    }
    Ok(K3 {
        k31: 6.0 + 2.0 / bm,
        k32: 3.0 * a / 4.0,
        k33: (15.0 + 1.0 / bm) * a / 4.0,
        k34: 3.0 / (4.0 * a) + 3.0 / (8.0 * bm),
        k35: (8.0 + 1.0 / bm) * 2.0 / a,
    })
}

/// Every constant that applies to `p`; the others are `None`.
pub fn k_constants(p: &CbfParams) -> KTable {
    KTable { k1: k1(p), k2: k2(p).ok(), k3: k3(p).ok() }
}
