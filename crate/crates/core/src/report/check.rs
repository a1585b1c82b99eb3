//! Checks of a decoded plan that use only its records and the scenario,
//! never the model rows.

use super::{DispatchKind, PlanReport};
use crate::scenario::{InventoryKind, Scenario};
use std::collections::HashMap;

/// Inventory levels rebuilt from the initial quantity and the plan's flows:
/// raw arrivals and treatment draws on raw inventories, output and
/// dispatches on treated ones. Period 1 holds the initial quantity. Series
/// are in the report's inventory order.
pub fn resimulate_inventories(report: &PlanReport) -> Vec<Vec<f64>> {
    let nt = report.nt;
    let mut arrivals: HashMap<(&str, &str, usize), f64> = HashMap::new();
    let mut sent: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for d in &report.dispatches {
        match d.kind {
            DispatchKind::RawSupply => {
                *arrivals.entry((&d.to, &d.product, d.arrival)).or_default() += d.kl;
            }
            DispatchKind::Delivery => {
                *sent.entry((&d.from, &d.product, d.period)).or_default() += d.kl;
            }
        }
    }
    report
        .inventories
        .iter()
        .map(|inv| {
            let plant = report.plants.iter().find(|p| p.facility == inv.facility);
            let mut levels = Vec::with_capacity(nt);
            let mut q = inv.initial;
            for t in 1..=nt {
                if t > 1 {
                    match inv.kind {
                        InventoryKind::RWI => {
                            q += arrivals
                                .get(&(inv.facility.as_str(), inv.product.as_str(), t))
                                .copied()
                                .unwrap_or(0.0);
                            if let Some(p) = plant {
                                for o in &p.output {
                                    q -= o.kl[t - 1] / o.recovery;
                                }
                            }
                        }
                        InventoryKind::TWI => {
                            if let Some(o) = plant
                                .and_then(|p| p.output.iter().find(|o| o.product == inv.product))
                            {
                                q += o.kl[t - 1];
                            }
                            q -= sent
                                .get(&(inv.facility.as_str(), inv.product.as_str(), t))
                                .copied()
                                .unwrap_or(0.0);
                        }
                    }
                }
                levels.push(q);
            }
            levels
        })
        .collect()
}

/// A period whose arrivals fall outside the consumer's demand bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandViolation {
    pub consumer: String,
    pub product: String,
    pub period: usize,
    pub arrived: f64,
    pub min: f64,
    pub max: f64,
}

/// Compares arrivals at every consumer with its demand window in every
/// period. Arrivals are counted in the period a delivery reaches the
/// consumer; a period without a demand entry accepts nothing.
pub fn demand_violations(sc: &Scenario, report: &PlanReport, tol: f64) -> Vec<DemandViolation> {
    let mut arrived: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for d in &report.dispatches {
        if d.kind == DispatchKind::Delivery {
            *arrived.entry((&d.to, &d.product, d.arrival)).or_default() += d.kl;
        }
    }
    let mut out = Vec::new();
    for (c, cons) in sc.consumers.iter().enumerate() {
        for (p, prod) in sc.products.iter().enumerate() {
            if !sc.is_final(p) {
                continue;
            }
            for t in 1..=sc.nt() {
                let bound = sc.demand(c, p, t);
                let got = arrived
                    .get(&(cons.id.as_str(), prod.id.as_str(), t))
                    .copied()
                    .unwrap_or(0.0);
                if got < bound.min - tol || got > bound.max.max(bound.min) + tol {
                    out.push(DemandViolation {
                        consumer: cons.id.clone(),
                        product: prod.id.clone(),
                        period: t,
                        arrived: got,
                        min: bound.min,
                        max: bound.max,
                    });
                }
            }
        }
    }
    out
}
