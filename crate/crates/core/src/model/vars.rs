//! Variable identities and their stable text names.

use crate::scenario::{
    ConsumerIdx, InventoryIdx, ProductIdx, RegionIdx, Scenario, SourceIdx, VehicleIdx,
};
use std::fmt;

/// Variable family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    YOp,
    YPSl,
    XSUp,
    XSDn,
    XQ,
    XSSupl,
    XDeCon,
    XBCV,
    XTVPlus,
    XTVMinus,
    XCDistb,
    XVSSupl,
    XPDl,
    XRw,
    XVQ,
    XVExQ,
}

impl Family {
    pub const ALL: [Family; 16] = [
        Family::YOp,
        Family::YPSl,
        Family::XSUp,
        Family::XSDn,
        Family::XQ,
        Family::XSSupl,
        Family::XDeCon,
        Family::XBCV,
        Family::XTVPlus,
        Family::XTVMinus,
        Family::XCDistb,
        Family::XVSSupl,
        Family::XPDl,
        Family::XRw,
        Family::XVQ,
        Family::XVExQ,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Family::YOp => "yOp",
            Family::YPSl => "yPSl",
            Family::XSUp => "xSUp",
            Family::XSDn => "xSDn",
            Family::XQ => "xQ",
            Family::XSSupl => "xSSupl",
            Family::XDeCon => "xDeCon",
            Family::XBCV => "xBCV",
            Family::XTVPlus => "xTVplus",
            Family::XTVMinus => "xTVminus",
            Family::XCDistb => "xCDistb",
            Family::XVSSupl => "xVSSupl",
            Family::XPDl => "xPDl",
            Family::XRw => "xRw",
            Family::XVQ => "xVQ",
            Family::XVExQ => "xVExQ",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// One model column, identified by family and index tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    /// Facility operating.
    YOp { s: SourceIdx, t: usize },
    /// Facility producing final product `p`.
    YPSl {
        s: SourceIdx,
        p: ProductIdx,
        t: usize,
    },
    /// Facility start-up.
    XSUp { s: SourceIdx, t: usize },
    /// Facility shut-down.
    XSDn { s: SourceIdx, t: usize },
    /// Inventory level.
    XQ { i: InventoryIdx, t: usize },
    /// Raw water dispatched from `s` to facility `s2`.
    XSSupl {
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        t: usize,
    },
    /// Product dispatched from `s` towards consumer `c`.
    XDeCon {
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        t: usize,
    },
    /// Shortfall below the buffer level.
    XBCV { i: InventoryIdx, t: usize },
    /// Excess over the target level.
    XTVPlus { i: InventoryIdx, t: usize },
    /// Shortfall below the target level.
    XTVMinus { i: InventoryIdx, t: usize },
    /// Horizon total delivered from `s` to `c` by vehicle class `v`.
    XCDistb {
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        v: VehicleIdx,
    },
    /// Horizon total of raw water moved from `s` to `s2` by class `v`.
    XVSSupl {
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        v: VehicleIdx,
    },
    /// Product dispatched from `s` to `c` by class `v` at `t`.
    XPDl {
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        v: VehicleIdx,
        t: usize,
    },
    /// Raw water dispatched from `s` to `s2` by class `v` at `t`.
    XRw {
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        v: VehicleIdx,
        t: usize,
    },
    /// Idle tanker capacity in kL at the end of `t`; `t = 0` is the start.
    XVQ {
        r: RegionIdx,
        v: VehicleIdx,
        p: ProductIdx,
        t: usize,
    },
    /// Hired tanker capacity in kL.
    XVExQ {
        r: RegionIdx,
        v: VehicleIdx,
        p: ProductIdx,
    },
}

impl VarId {
    pub fn family(&self) -> Family {
        match self {
            VarId::YOp { .. } => Family::YOp,
            VarId::YPSl { .. } => Family::YPSl,
            VarId::XSUp { .. } => Family::XSUp,
            VarId::XSDn { .. } => Family::XSDn,
            VarId::XQ { .. } => Family::XQ,
            VarId::XSSupl { .. } => Family::XSSupl,
            VarId::XDeCon { .. } => Family::XDeCon,
            VarId::XBCV { .. } => Family::XBCV,
            VarId::XTVPlus { .. } => Family::XTVPlus,
            VarId::XTVMinus { .. } => Family::XTVMinus,
            VarId::XCDistb { .. } => Family::XCDistb,
            VarId::XVSSupl { .. } => Family::XVSSupl,
            VarId::XPDl { .. } => Family::XPDl,
            VarId::XRw { .. } => Family::XRw,
            VarId::XVQ { .. } => Family::XVQ,
            VarId::XVExQ { .. } => Family::XVExQ,
        }
    }

    /// Period index, if the variable has one.
    pub fn period(&self) -> Option<usize> {
        match *self {
            VarId::YOp { t, .. }
            | VarId::YPSl { t, .. }
            | VarId::XSUp { t, .. }
            | VarId::XSDn { t, .. }
            | VarId::XQ { t, .. }
            | VarId::XSSupl { t, .. }
            | VarId::XDeCon { t, .. }
            | VarId::XBCV { t, .. }
            | VarId::XTVPlus { t, .. }
            | VarId::XTVMinus { t, .. }
            | VarId::XPDl { t, .. }
            | VarId::XRw { t, .. }
            | VarId::XVQ { t, .. } => Some(t),
            _ => None,
        }
    }

    /// Name such as `yOp_TF1_t017`: family prefix, entity ids, and a
    /// zero-padded period, joined by underscores. Ids never contain `_`.
    pub fn name(&self, sc: &Scenario) -> String {
        let s = |i: SourceIdx| sc.sources[i].id.as_str();
        let c = |i: ConsumerIdx| sc.consumers[i].id.as_str();
        let p = |i: ProductIdx| sc.products[i].id.as_str();
        let v = |i: VehicleIdx| sc.vehicles[i].id.as_str();
        let inv = |i: InventoryIdx| {
            let x = &sc.inventories[i];
            format!("{}_{}_{}", s(x.owner), x.kind, p(x.product))
        };
        let f = self.family().prefix();
        match *self {
            VarId::YOp { s: a, t } | VarId::XSUp { s: a, t } | VarId::XSDn { s: a, t } => {
                format!("{f}_{}_t{t:03}", s(a))
            }
            VarId::YPSl { s: a, p: b, t } => format!("{f}_{}_{}_t{t:03}", s(a), p(b)),
            VarId::XQ { i, t }
            | VarId::XBCV { i, t }
            | VarId::XTVPlus { i, t }
            | VarId::XTVMinus { i, t } => format!("{f}_{}_t{t:03}", inv(i)),
            VarId::XSSupl { s: a, s2, p: b, t } => {
                format!("{f}_{}_{}_{}_t{t:03}", s(a), s(s2), p(b))
            }
            VarId::XDeCon {
                s: a,
                c: k,
                p: b,
                t,
            } => {
                format!("{f}_{}_{}_{}_t{t:03}", s(a), c(k), p(b))
            }
            VarId::XCDistb {
                s: a,
                c: k,
                p: b,
                v: w,
            } => {
                format!("{f}_{}_{}_{}_{}", s(a), c(k), p(b), v(w))
            }
            VarId::XVSSupl {
                s: a,
                s2,
                p: b,
                v: w,
            } => {
                format!("{f}_{}_{}_{}_{}", s(a), s(s2), p(b), v(w))
            }
            VarId::XPDl {
                s: a,
                c: k,
                p: b,
                v: w,
                t,
            } => {
                format!("{f}_{}_{}_{}_{}_t{t:03}", s(a), c(k), p(b), v(w))
            }
            VarId::XRw {
                s: a,
                s2,
                p: b,
                v: w,
                t,
            } => {
                format!("{f}_{}_{}_{}_{}_t{t:03}", s(a), s(s2), p(b), v(w))
            }
            VarId::XVQ { r, v: w, p: b, t } => {
                format!("{f}_{}_{}_{}_t{t:03}", sc.regions[r], v(w), p(b))
            }
            VarId::XVExQ { r, v: w, p: b } => {
                format!("{f}_{}_{}_{}", sc.regions[r], v(w), p(b))
            }
        }
    }
}
