//! Cross-reference and invariant checks run before model construction.

use super::*;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

struct Out(Vec<Violation>);

impl Out {
    fn error(&mut self, message: String) {
        self.0.push(Violation {
            severity: Severity::Error,
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.0.push(Violation {
            severity: Severity::Warning,
            message,
        });
    }
}

/// Checks every invariant of the scenario. The result is empty for a valid
/// scenario and always comes back in the same order for the same input.
pub fn validate(sc: &Scenario) -> Vec<Violation> {
    let mut out = Out(Vec::new());
    check_horizon(sc, &mut out);
    check_sources(sc, &mut out);
    check_inventories(sc, &mut out);
    check_vehicles(sc, &mut out);
    check_times_and_costs(sc, &mut out);
    check_consumers(sc, &mut out);
    check_overrides(sc, &mut out);
    out.0
}

fn check_horizon(sc: &Scenario, out: &mut Out) {
    let h = sc.horizon;
    if h.nt < 1 {
        out.error("horizon: nt must be at least 1".into());
    }
    if h.demand_start < 1 || h.demand_start > h.nt.max(1) {
        out.error(format!(
            "horizon: demand_start {} outside 1-{}",
            h.demand_start, h.nt
        ));
    }
}

fn check_sources(sc: &Scenario, out: &mut Out) {
    for (s, src) in sc.sources.iter().enumerate() {
        let id = &src.id;
        let is_tf = src.source_type == SourceType::TF;
        if !(src.throughput >= 0.0 && src.throughput.is_finite()) {
            out.error(format!(
                "source {id}: throughput must be finite and nonnegative"
            ));
        }
        if is_tf && src.throughput <= 0.0 {
            out.error(format!(
                "source {id}: treatment facility needs positive throughput"
            ));
        }
        if !is_tf && src.throughput != 0.0 {
            out.error(format!(
                "source {id}: throughput is only defined for treatment facilities"
            ));
        }
        if src.extraction_limit < 0.0 || !src.extraction_limit.is_finite() {
            out.error(format!(
                "source {id}: extraction limit must be finite and nonnegative"
            ));
        }
        if src.extraction_limit != 0.0 && src.source_type != SourceType::GW {
            out.error(format!(
                "source {id}: extraction limit is only defined for groundwater sources"
            ));
        }
        if is_tf && (src.min_uptime < 1 || src.min_downtime < 1) {
            out.error(format!(
                "source {id}: min uptime and downtime must be at least 1"
            ));
        }
        for (&p, &b) in &src.recovery {
            if !(b > 0.0 && b <= 1.0) {
                out.error(format!(
                    "source {id}: recovery fraction {b} for {} outside (0, 1]",
                    sc.products[p].id
                ));
            }
        }
        for &p in &src.products {
            let pid = &sc.products[p].id;
            match (src.source_type, sc.products[p].kind) {
                (SourceType::GW, ProductKind::Final) => out.error(format!(
                    "source {id}: groundwater source cannot supply final product {pid}"
                )),
                (SourceType::FW | SourceType::TF, ProductKind::Raw) => out.error(format!(
                    "source {id}: {} source cannot supply raw product {pid}",
                    src.source_type
                )),
                _ => {}
            }
            if is_tf && sc.is_final(p) {
                if !src.recovery.contains_key(&p) {
                    out.warn(format!(
                        "source {id}: no recovery fraction for {pid}, assuming 1.0"
                    ));
                }
                if sc.inventory(s, InventoryKind::TWI, p).is_none() {
                    out.error(format!("source {id}: no treated-water inventory for {pid}"));
                }
            }
        }
        if !src.consumers.is_empty() && src.source_type == SourceType::GW {
            out.error(format!(
                "source {id}: groundwater source cannot serve consumers"
            ));
        }
        for link in &src.supplies {
            let to = &sc.sources[link.to];
            if to.source_type != SourceType::TF {
                out.error(format!(
                    "source {id}: supply link to {} which is not a treatment facility",
                    to.id
                ));
            }
            if link.to == s {
                out.error(format!("source {id}: supply link to itself"));
            }
            let raw: Vec<ProductIdx> = src
                .products
                .iter()
                .copied()
                .filter(|&p| sc.is_raw(p))
                .collect();
            if !raw.iter().any(|&p| sc.ssp(s, link.to, p)) {
                out.error(format!(
                    "source {id}: supply link to {} carries no raw product it stocks",
                    to.id
                ));
            }
            for &p in &raw {
                if sc.ssp(s, link.to, p) && sc.raw_vehicles(s, link.to, p).is_empty() {
                    out.error(format!(
                        "source {id}: no vehicle fleeted in its region can carry {} to {}",
                        sc.products[p].id, to.id
                    ));
                }
            }
        }
    }
    for s in sc.treatment_facilities() {
        for (p, prod) in sc.products.iter().enumerate() {
            if prod.kind != ProductKind::Raw || sc.inventory(s, InventoryKind::RWI, p).is_none() {
                continue;
            }
            let fed = (0..sc.sources.len())
                .any(|g| sc.sources[g].source_type == SourceType::GW && sc.ssp(g, s, p));
            if !fed {
                out.error(format!(
                    "source {}: raw-water inventory for {} has no groundwater feeder",
                    sc.sources[s].id, prod.id
                ));
            }
        }
    }
}

fn check_inventories(sc: &Scenario, out: &mut Out) {
    for inv in &sc.inventories {
        let name = format!(
            "inventory {}/{}/{}",
            sc.sources[inv.owner].id, inv.kind, sc.products[inv.product].id
        );
        if sc.sources[inv.owner].source_type != SourceType::TF {
            out.error(format!("{name}: owner is not a treatment facility"));
        }
        let kind_ok = match inv.kind {
            InventoryKind::RWI => sc.is_raw(inv.product),
            InventoryKind::TWI => sc.is_final(inv.product),
        };
        if !kind_ok {
            out.error(format!(
                "{name}: product kind does not match inventory kind"
            ));
        }
        let vals = [
            inv.cap_min,
            inv.cap_max,
            inv.initial_qty,
            inv.target_penalty,
            inv.buffer_penalty,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            out.error(format!(
                "{name}: capacities, quantities and penalties must be finite and nonnegative"
            ));
        }
        if inv.cap_min > inv.cap_max {
            out.error(format!("{name}: min capacity exceeds max capacity"));
        }
        if let Some(b) = inv.cap_buffer {
            if inv.kind != InventoryKind::RWI {
                out.error(format!(
                    "{name}: buffers are only defined for raw-water inventories"
                ));
            }
            if b > inv.cap_max {
                out.error(format!("{name}: buffer exceeds max capacity"));
            }
            if b < inv.cap_min {
                out.error(format!("{name}: buffer below min capacity"));
            }
        }
        if inv.initial_qty < inv.cap_min || inv.initial_qty > inv.cap_max {
            out.error(format!("{name}: initial quantity outside capacity range"));
        }
        if !inv.target.is_empty() && inv.kind != InventoryKind::TWI {
            out.error(format!(
                "{name}: targets are only defined for treated-water inventories"
            ));
        }
        for span in &inv.target {
            if span.from < 1 || span.to > sc.nt() || span.from > span.to {
                out.error(format!(
                    "{name}: target range {}-{} outside horizon",
                    span.from, span.to
                ));
            }
            if span.kl < 0.0 || span.kl > inv.cap_max {
                out.error(format!(
                    "{name}: target {} outside 0-{}",
                    span.kl, inv.cap_max
                ));
            }
        }
    }
}

fn check_vehicles(sc: &Scenario, out: &mut Out) {
    for v in &sc.vehicles {
        if !(v.capacity > 0.0 && v.capacity.is_finite()) {
            out.error(format!("vehicle {}: capacity must be positive", v.id));
        }
        if v.hire_cost.values().any(|c| !c.is_finite() || *c < 0.0) {
            out.error(format!(
                "vehicle {}: hire costs must be finite and nonnegative",
                v.id
            ));
        }
    }
}

fn check_times_and_costs(sc: &Scenario, out: &mut Out) {
    let all = sc
        .times
        .travel
        .iter()
        .chain(&sc.costs.distribution)
        .chain(&sc.costs.raw_supply);
    for e in all {
        if !e.value.is_finite() || e.value < 0.0 {
            out.error(format!(
                "link from {}: times and costs must be finite and nonnegative",
                sc.sources[e.from].id
            ));
        }
    }
    for e in sc.times.prep.iter().chain(&sc.times.disinfection) {
        if !e.hours.is_finite() || e.hours < 0.0 {
            out.error(format!(
                "source {}: preparation and disinfection hours must be finite and nonnegative",
                sc.sources[e.source].id
            ));
        }
    }
    for e in &sc.times.disinfection {
        if e.hours != 0.0 && sc.sources[e.source].source_type != SourceType::FW {
            out.error(format!(
                "source {}: disinfection time is only defined for freshwater sources",
                sc.sources[e.source].id
            ));
        }
    }
    for (s, src) in sc.sources.iter().enumerate() {
        for &c in &src.consumers {
            for &p in &src.products {
                for v in sc.delivery_vehicles(s, c, p) {
                    if sc.travel_to_consumer(s, c, p, v).is_none() {
                        out.error(format!(
                            "missing travel time {} -> {} for {} by {}",
                            src.id, sc.consumers[c].id, sc.products[p].id, sc.vehicles[v].id
                        ));
                    }
                }
            }
        }
        for link in &src.supplies {
            for &p in &src.products {
                for v in sc.raw_vehicles(s, link.to, p) {
                    if sc.travel_to_source(s, link.to, p, v).is_none() {
                        out.error(format!(
                            "missing travel time {} -> {} for {} by {}",
                            src.id, sc.sources[link.to].id, sc.products[p].id, sc.vehicles[v].id
                        ));
                    }
                }
            }
        }
    }
}

fn check_consumers(sc: &Scenario, out: &mut Out) {
    for (c, cons) in sc.consumers.iter().enumerate() {
        let mut demanded: Vec<ProductIdx> = Vec::new();
        for (&(p, t), b) in &cons.demand {
            let pid = &sc.products[p].id;
            if t < 1 || t > sc.nt() {
                out.error(format!(
                    "consumer {}: demand for {pid} at period {t} outside horizon",
                    cons.id
                ));
            }
            if !(b.min >= 0.0 && b.min <= b.max && b.max.is_finite()) {
                out.error(format!(
                    "consumer {}: demand bounds {}..{} for {pid} at period {t} invalid",
                    cons.id, b.min, b.max
                ));
            }
            if b.max > 0.0 && !sc.is_final(p) {
                out.error(format!(
                    "consumer {}: demand for raw product {pid}",
                    cons.id
                ));
            }
            if b.max > 0.0 && demanded.last() != Some(&p) {
                demanded.push(p);
            }
        }
        for p in demanded {
            let pid = &sc.products[p].id;
            let sources: Vec<(SourceIdx, Option<usize>)> = (0..sc.sources.len())
                .filter(|&s| {
                    sc.sc(s, c) && sc.sp(s, p) && !sc.delivery_vehicles(s, c, p).is_empty()
                })
                .map(|s| (s, sc.transit(s, c, p)))
                .collect();
            if sources.is_empty() {
                out.error(format!("consumer {}: unservable demand for {pid}", cons.id));
                continue;
            }
            let earliest = sources
                .iter()
                .filter_map(|&(_, tr)| tr)
                .map(|tr| tr + 1)
                .min();
            let late: Vec<usize> = cons
                .demand
                .range((p, 0)..(p + 1, 0))
                .filter(|(&(_, t), b)| b.min > 0.0 && earliest.is_none_or(|e| t < e))
                .map(|(&(_, t), _)| t)
                .collect();
            if let (Some(&first), Some(&last)) = (late.first(), late.last()) {
                out.error(format!(
                    "consumer {}: demand for {pid} in periods {first}-{last} cannot arrive in time",
                    cons.id
                ));
            }
        }
    }
}

fn check_overrides(sc: &Scenario, out: &mut Out) {
    for o in &sc.overrides {
        let src = &sc.sources[o.source];
        if src.source_type != SourceType::TF {
            out.error(format!("override on {}: not a treatment facility", src.id));
        }
        if o.from <= o.to && (o.from < 1 || o.to > sc.nt()) {
            out.error(format!(
                "override on {}: range {}-{} outside horizon",
                src.id, o.from, o.to
            ));
        }
    }
}
