use super::{BuildOptions, MilpModel, RowFamily, UnservablePeriod, VarId};
use crate::scenario::{
    ceil_hours, ConsumerIdx, InventoryKind, ProductIdx, RegionIdx, Scenario, SourceIdx, SourceType,
    VehicleIdx,
};
use hydroplan_milp::{LpBuilder, LpError, MipProblem, Sense};
use std::collections::{BTreeSet, HashMap};

const INF: f64 = f64::INFINITY;

/// Vehicle class usable on a link with its round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkVehicle {
    pub v: VehicleIdx,
    /// Round trip in hours.
    pub rtt_hours: f64,
    /// Round trip in whole periods, at least 1.
    pub rtt_periods: usize,
}

/// A source-to-consumer delivery link for one product.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryLink {
    pub s: SourceIdx,
    pub c: ConsumerIdx,
    pub p: ProductIdx,
    pub transit: usize,
    pub vehicles: Vec<LinkVehicle>,
}

/// A raw-water link from a source to a treatment facility.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLink {
    pub s: SourceIdx,
    pub s2: SourceIdx,
    pub p: ProductIdx,
    pub transit: usize,
    pub vehicles: Vec<LinkVehicle>,
}

/// Incremental model assembly. Every column is created by [`new`]; the
/// `add_*` methods append one constraint family each and return the number
/// of rows added.
///
/// [`new`]: ModelBuilder::new
pub struct ModelBuilder<'a> {
    sc: &'a Scenario,
    opts: BuildOptions,
    lp: LpBuilder,
    vars: Vec<VarId>,
    integer: Vec<bool>,
    index: HashMap<VarId, usize>,
    row_names: Vec<String>,
    row_families: Vec<RowFamily>,
    unservable: Vec<UnservablePeriod>,
    deliveries: Vec<DeliveryLink>,
    raw_links: Vec<RawLink>,
    fleets: Vec<(RegionIdx, VehicleIdx, ProductIdx)>,
}

/// Delivery links of a scenario, in source, consumer, product order. Links
/// to consumers without demand for the product are left out.
pub fn delivery_links(sc: &Scenario) -> Vec<DeliveryLink> {
    let mut out = Vec::new();
    for (s, src) in sc.sources.iter().enumerate() {
        if src.source_type == SourceType::GW {
            continue;
        }
        let mut consumers = src.consumers.clone();
        consumers.sort_unstable();
        consumers.dedup();
        let mut products: Vec<ProductIdx> = src
            .products
            .iter()
            .copied()
            .filter(|&p| sc.is_final(p))
            .collect();
        products.sort_unstable();
        products.dedup();
        for &c in &consumers {
            for &p in &products {
                let demanded = sc.consumers[c]
                    .demand
                    .range((p, 0)..(p + 1, 0))
                    .any(|(_, b)| b.max > 0.0);
                if !demanded {
                    continue;
                }
                let Some(transit) = sc.transit(s, c, p) else {
                    continue;
                };
                let vehicles: Vec<LinkVehicle> = sc
                    .delivery_vehicles(s, c, p)
                    .into_iter()
                    .filter_map(|v| {
                        let travel = sc.travel_to_consumer(s, c, p, v)?;
                        let h = 2.0 * travel
                            + sc.prep_time(s, v)
                            + sc.disinfection_time(s, v)
                            + sc.consumers[c].distribution_time;
                        Some(LinkVehicle {
                            v,
                            rtt_hours: h,
                            rtt_periods: ceil_hours(h).max(1),
                        })
                    })
                    .collect();
                if !vehicles.is_empty() {
                    out.push(DeliveryLink {
                        s,
                        c,
                        p,
                        transit,
                        vehicles,
                    });
                }
            }
        }
    }
    out
}

/// Raw-water links of a scenario, in source, facility, product order.
pub fn raw_links(sc: &Scenario) -> Vec<RawLink> {
    let mut out = Vec::new();
    for (s, src) in sc.sources.iter().enumerate() {
        let mut targets: Vec<SourceIdx> = src.supplies.iter().map(|l| l.to).collect();
        targets.sort_unstable();
        targets.dedup();
        let mut products: Vec<ProductIdx> = src
            .products
            .iter()
            .copied()
            .filter(|&p| sc.is_raw(p))
            .collect();
        products.sort_unstable();
        products.dedup();
        for &s2 in &targets {
            for &p in &products {
                if !sc.ssp(s, s2, p) {
                    continue;
                }
                let Some(transit) = sc.raw_transit(s, s2, p) else {
                    continue;
                };
                let vehicles: Vec<LinkVehicle> = sc
                    .raw_vehicles(s, s2, p)
                    .into_iter()
                    .filter_map(|v| {
                        let travel = sc.travel_to_source(s, s2, p, v)?;
                        let h = 2.0 * travel + sc.prep_time(s, v);
                        Some(LinkVehicle {
                            v,
                            rtt_hours: h,
                            rtt_periods: ceil_hours(h).max(1),
                        })
                    })
                    .collect();
                if !vehicles.is_empty() {
                    out.push(RawLink {
                        s,
                        s2,
                        p,
                        transit,
                        vehicles,
                    });
                }
            }
        }
    }
    out
}

impl<'a> ModelBuilder<'a> {
    /// Creates every column. Bounds encode fixings only: forced-off
    /// periods, unusable dispatch periods and unavailable hires.
    pub fn new(sc: &'a Scenario, opts: BuildOptions) -> Self {
        let deliveries = delivery_links(sc);
        let raw_links = raw_links(sc);
        let mut fleet_set = BTreeSet::new();
        for d in &deliveries {
            for lv in &d.vehicles {
                fleet_set.insert((sc.sources[d.s].region, lv.v, d.p));
            }
        }
        for l in &raw_links {
            for lv in &l.vehicles {
                fleet_set.insert((sc.sources[l.s].region, lv.v, l.p));
            }
        }
        let mut b = ModelBuilder {
            sc,
            opts,
            lp: LpBuilder::new(),
            vars: Vec::new(),
            integer: Vec::new(),
            index: HashMap::new(),
            row_names: Vec::new(),
            row_families: Vec::new(),
            unservable: Vec::new(),
            deliveries,
            raw_links,
            fleets: fleet_set.into_iter().collect(),
        };
        b.create_columns();
        b
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    pub fn deliveries(&self) -> &[DeliveryLink] {
        &self.deliveries
    }

    pub fn raw_links(&self) -> &[RawLink] {
        &self.raw_links
    }

    fn col(&mut self, id: VarId, lo: f64, hi: f64, integer: bool) {
        let j = self.lp.add_col(0.0, lo, hi);
        self.vars.push(id);
        self.integer.push(integer);
        self.index.insert(id, j);
    }

    fn idx(&self, id: VarId) -> usize {
        self.index[&id]
    }

    fn get(&self, id: VarId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    fn row(&mut self, name: String, coefs: &[(usize, f64)], sense: Sense, rhs: f64) {
        self.lp.add_row(coefs, sense, rhs);
        self.row_names.push(name);
    }

    fn record(&mut self, name: &'static str, before: usize) -> usize {
        let n = self.row_names.len() - before;
        self.row_families.push(RowFamily { name, rows: n });
        n
    }

    fn tf_final_products(&self, s: SourceIdx) -> Vec<ProductIdx> {
        let mut ps: Vec<ProductIdx> = self.sc.sources[s]
            .products
            .iter()
            .copied()
            .filter(|&p| self.sc.is_final(p))
            .collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    /// Whether a dispatch at `t` on a delivery link can be used: it must
    /// arrive within the horizon in a period with positive maximum demand,
    /// and facility stock cannot leave in period 1, whose level is fixed.
    fn dispatch_open(&self, d: &DeliveryLink, t: usize) -> bool {
        let arrive = t + d.transit;
        if arrive > self.sc.nt() || self.sc.demand(d.c, d.p, arrive).max <= 0.0 {
            return false;
        }
        !(t == 1 && self.sc.sources[d.s].source_type == SourceType::TF)
    }

    fn create_columns(&mut self) {
        let sc = self.sc;
        let nt = sc.nt();
        let tfs: Vec<SourceIdx> = sc.treatment_facilities().collect();
        for &s in &tfs {
            for t in 1..=nt {
                let hi = if sc.forced_off(s, t) { 0.0 } else { 1.0 };
                self.col(VarId::YOp { s, t }, 0.0, hi, true);
            }
        }
        for &s in &tfs {
            for p in self.tf_final_products(s) {
                for t in 1..=nt {
                    let hi = if sc.forced_off(s, t) { 0.0 } else { 1.0 };
                    self.col(VarId::YPSl { s, p, t }, 0.0, hi, !self.opts.relax_psl);
                }
            }
        }
        for &s in &tfs {
            for t in 1..=nt {
                self.col(VarId::XSUp { s, t }, 0.0, 1.0, false);
            }
        }
        for &s in &tfs {
            for t in 1..=nt {
                self.col(VarId::XSDn { s, t }, 0.0, 1.0, false);
            }
        }
        for (i, inv) in sc.inventories.iter().enumerate() {
            if sc.sources[inv.owner].source_type != SourceType::TF {
                continue;
            }
            for t in 1..=nt {
                self.col(VarId::XQ { i, t }, 0.0, INF, false);
            }
        }
        for k in 0..self.raw_links.len() {
            let l = &self.raw_links[k];
            let (s, s2, p) = (l.s, l.s2, l.p);
            for t in 1..=nt {
                self.col(VarId::XSSupl { s, s2, p, t }, 0.0, INF, false);
            }
        }
        for k in 0..self.deliveries.len() {
            let d = self.deliveries[k].clone();
            for t in 1..=nt {
                let hi = if self.dispatch_open(&d, t) { INF } else { 0.0 };
                self.col(
                    VarId::XDeCon {
                        s: d.s,
                        c: d.c,
                        p: d.p,
                        t,
                    },
                    0.0,
                    hi,
                    false,
                );
            }
        }
        for (i, inv) in sc.inventories.iter().enumerate() {
            if inv.kind == InventoryKind::RWI && inv.cap_buffer.is_some_and(|b| b > 0.0) {
                for t in 1..=nt {
                    self.col(VarId::XBCV { i, t }, 0.0, INF, false);
                }
            }
        }
        for (i, inv) in sc.inventories.iter().enumerate() {
            if inv.kind == InventoryKind::TWI {
                for t in (1..=nt).filter(|&t| inv.target_at(t) > 0.0) {
                    self.col(VarId::XTVPlus { i, t }, 0.0, INF, false);
                }
            }
        }
        for (i, inv) in sc.inventories.iter().enumerate() {
            if inv.kind == InventoryKind::TWI {
                for t in (1..=nt).filter(|&t| inv.target_at(t) > 0.0) {
                    self.col(VarId::XTVMinus { i, t }, 0.0, INF, false);
                }
            }
        }
        for k in 0..self.deliveries.len() {
            let d = self.deliveries[k].clone();
            for lv in &d.vehicles {
                let id = VarId::XCDistb {
                    s: d.s,
                    c: d.c,
                    p: d.p,
                    v: lv.v,
                };
                self.col(id, 0.0, INF, false);
            }
        }
        for k in 0..self.raw_links.len() {
            let l = self.raw_links[k].clone();
            for lv in &l.vehicles {
                let id = VarId::XVSSupl {
                    s: l.s,
                    s2: l.s2,
                    p: l.p,
                    v: lv.v,
                };
                self.col(id, 0.0, INF, false);
            }
        }
        for k in 0..self.deliveries.len() {
            let d = self.deliveries[k].clone();
            for lv in &d.vehicles {
                for t in 1..=nt {
                    let hi = if self.dispatch_open(&d, t) { INF } else { 0.0 };
                    let id = VarId::XPDl {
                        s: d.s,
                        c: d.c,
                        p: d.p,
                        v: lv.v,
                        t,
                    };
                    self.col(id, 0.0, hi, false);
                }
            }
        }
        for k in 0..self.raw_links.len() {
            let l = self.raw_links[k].clone();
            for lv in &l.vehicles {
                for t in 1..=nt {
                    let id = VarId::XRw {
                        s: l.s,
                        s2: l.s2,
                        p: l.p,
                        v: lv.v,
                        t,
                    };
                    self.col(id, 0.0, INF, false);
                }
            }
        }
        if self.opts.hourly_fleet_balance {
            for k in 0..self.fleets.len() {
                let (r, v, p) = self.fleets[k];
                for t in 0..=nt {
                    self.col(VarId::XVQ { r, v, p, t }, 0.0, INF, false);
                }
            }
        }
        for k in 0..self.fleets.len() {
            let (r, v, p) = self.fleets[k];
            let hi = if sc.hire_cost(v, p).is_some() {
                INF
            } else {
                0.0
            };
            self.col(VarId::XVExQ { r, v, p }, 0.0, hi, false);
        }
    }

    /// Start-up/shut-down bookkeeping and minimum up and down times.
    pub fn add_transition_constraints(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        let nt = sc.nt();
        for s in sc.treatment_facilities().collect::<Vec<_>>() {
            let src = &sc.sources[s];
            let id = &src.id;
            for t in 1..=nt {
                let mut coefs = vec![
                    (self.idx(VarId::XSUp { s, t }), 1.0),
                    (self.idx(VarId::XSDn { s, t }), -1.0),
                    (self.idx(VarId::YOp { s, t }), -1.0),
                ];
                let rhs = if t == 1 {
                    -(src.initial_on as u8 as f64)
                } else {
                    coefs.push((self.idx(VarId::YOp { s, t: t - 1 }), 1.0));
                    0.0
                };
                self.row(format!("trans_{id}_t{t:03}"), &coefs, Sense::Eq, rhs);
            }
            for t in 1..=nt {
                let from = (t + 1).saturating_sub(src.min_uptime).max(1);
                let mut coefs: Vec<(usize, f64)> = (from..=t)
                    .map(|k| (self.idx(VarId::XSUp { s, t: k }), 1.0))
                    .collect();
                coefs.push((self.idx(VarId::YOp { s, t }), -1.0));
                self.row(format!("uptime_{id}_t{t:03}"), &coefs, Sense::Le, 0.0);
            }
            for t in 1..=nt {
                let from = (t + 1).saturating_sub(src.min_downtime).max(1);
                let mut coefs: Vec<(usize, f64)> = (from..=t)
                    .map(|k| (self.idx(VarId::XSDn { s, t: k }), 1.0))
                    .collect();
                coefs.push((self.idx(VarId::YOp { s, t }), 1.0));
                self.row(format!("downtime_{id}_t{t:03}"), &coefs, Sense::Le, 1.0);
            }
        }
        self.record("transition", before)
    }

    /// One final product at a time while operating.
    pub fn add_product_selection(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        for s in sc.treatment_facilities().collect::<Vec<_>>() {
            let ps = self.tf_final_products(s);
            for t in 1..=sc.nt() {
                let mut coefs: Vec<(usize, f64)> = ps
                    .iter()
                    .map(|&p| (self.idx(VarId::YPSl { s, p, t }), 1.0))
                    .collect();
                coefs.push((self.idx(VarId::YOp { s, t }), -1.0));
                self.row(
                    format!("select_{}_t{t:03}", sc.sources[s].id),
                    &coefs,
                    Sense::Eq,
                    0.0,
                );
            }
        }
        self.record("product_selection", before)
    }

    /// Raw and treated inventory balances with the period-1 levels fixed.
    pub fn add_inventory_balances(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        let nt = sc.nt();
        for (i, inv) in sc.inventories.iter().enumerate() {
            let s = inv.owner;
            if sc.sources[s].source_type != SourceType::TF {
                continue;
            }
            let stpt = sc.sources[s].throughput;
            let tag = format!(
                "{}_{}_{}",
                sc.sources[s].id, inv.kind, sc.products[inv.product].id
            );
            self.row(
                format!("bal_{tag}_t001"),
                &[(self.idx(VarId::XQ { i, t: 1 }), 1.0)],
                Sense::Eq,
                inv.initial_qty,
            );
            for t in 2..=nt {
                let mut coefs = vec![
                    (self.idx(VarId::XQ { i, t }), 1.0),
                    (self.idx(VarId::XQ { i, t: t - 1 }), -1.0),
                ];
                match inv.kind {
                    InventoryKind::RWI => {
                        for l in self
                            .raw_links
                            .iter()
                            .filter(|l| l.s2 == s && l.p == inv.product)
                        {
                            if t > l.transit {
                                let id = VarId::XSSupl {
                                    s: l.s,
                                    s2: s,
                                    p: l.p,
                                    t: t - l.transit,
                                };
                                coefs.push((self.idx(id), -1.0));
                            }
                        }
                        for p in self.tf_final_products(s) {
                            let draw = stpt / sc.recovery(s, p);
                            coefs.push((self.idx(VarId::YPSl { s, p, t }), draw));
                        }
                    }
                    InventoryKind::TWI => {
                        if let Some(j) = self.get(VarId::YPSl {
                            s,
                            p: inv.product,
                            t,
                        }) {
                            coefs.push((j, -stpt));
                        }
                        for d in self
                            .deliveries
                            .iter()
                            .filter(|d| d.s == s && d.p == inv.product)
                        {
                            let id = VarId::XDeCon {
                                s,
                                c: d.c,
                                p: d.p,
                                t,
                            };
                            coefs.push((self.idx(id), 1.0));
                        }
                    }
                }
                self.row(format!("bal_{tag}_t{t:03}"), &coefs, Sense::Eq, 0.0);
            }
        }
        self.record("inventory_balance", before)
    }

    /// Physical limits, raw-water buffers and treated-water targets.
    pub fn add_inventory_bounds(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        let nt = sc.nt();
        for (i, inv) in sc.inventories.iter().enumerate() {
            if sc.sources[inv.owner].source_type != SourceType::TF {
                continue;
            }
            let tag = format!(
                "{}_{}_{}",
                sc.sources[inv.owner].id, inv.kind, sc.products[inv.product].id
            );
            for t in 1..=nt {
                let q = self.idx(VarId::XQ { i, t });
                self.row(
                    format!("min_{tag}_t{t:03}"),
                    &[(q, 1.0)],
                    Sense::Ge,
                    inv.cap_min,
                );
                self.row(
                    format!("max_{tag}_t{t:03}"),
                    &[(q, 1.0)],
                    Sense::Le,
                    inv.cap_max,
                );
                if let Some(bcv) = self.get(VarId::XBCV { i, t }) {
                    let level = inv.cap_buffer.unwrap_or(0.0);
                    self.row(
                        format!("buffer_{tag}_t{t:03}"),
                        &[(q, 1.0), (bcv, 1.0)],
                        Sense::Ge,
                        level,
                    );
                }
                if let (Some(plus), Some(minus)) = (
                    self.get(VarId::XTVPlus { i, t }),
                    self.get(VarId::XTVMinus { i, t }),
                ) {
                    self.row(
                        format!("target_{tag}_t{t:03}"),
                        &[(q, 1.0), (plus, -1.0), (minus, 1.0)],
                        Sense::Eq,
                        inv.target_at(t),
                    );
                }
            }
        }
        self.record("inventory_bounds", before)
    }

    /// Per-period extraction caps on groundwater links.
    pub fn add_extraction_limits(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        for k in 0..self.raw_links.len() {
            let (s, s2, p) = (
                self.raw_links[k].s,
                self.raw_links[k].s2,
                self.raw_links[k].p,
            );
            let src = &sc.sources[s];
            if src.source_type != SourceType::GW || src.extraction_limit <= 0.0 {
                continue;
            }
            for t in 1..=sc.nt() {
                let j = self.idx(VarId::XSSupl { s, s2, p, t });
                self.row(
                    format!(
                        "extract_{}_{}_{}_t{t:03}",
                        src.id, sc.sources[s2].id, sc.products[p].id
                    ),
                    &[(j, 1.0)],
                    Sense::Le,
                    src.extraction_limit,
                );
            }
        }
        self.record("extraction_limit", before)
    }

    /// Arrivals within each period's demand bounds. Periods with positive
    /// minimum demand that no source can reach are recorded as unservable.
    pub fn add_demand_constraints(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        for (c, cons) in sc.consumers.iter().enumerate() {
            for (&(p, t), bound) in &cons.demand {
                if !sc.is_final(p) || t < 1 || t > sc.nt() {
                    continue;
                }
                let coefs: Vec<(usize, f64)> = self
                    .deliveries
                    .iter()
                    .filter(|d| d.c == c && d.p == p && t > d.transit)
                    .map(|d| {
                        let id = VarId::XDeCon {
                            s: d.s,
                            c,
                            p,
                            t: t - d.transit,
                        };
                        (self.idx(id), 1.0)
                    })
                    .collect();
                let tag = format!("{}_{}_t{t:03}", cons.id, sc.products[p].id);
                if bound.min > 0.0 {
                    if coefs.is_empty() {
                        self.unservable.push(UnservablePeriod {
                            consumer: c,
                            product: p,
                            t,
                        });
                    } else {
                        self.row(format!("demmin_{tag}"), &coefs, Sense::Ge, bound.min);
                    }
                }
                if bound.max > 0.0 && !coefs.is_empty() {
                    self.row(format!("demmax_{tag}"), &coefs, Sense::Le, bound.max);
                }
            }
        }
        self.record("demand", before)
    }

    /// Horizon totals, regional time capacity, per-period vehicle split,
    /// and, if enabled, the hourly dispatch/return recurrence.
    pub fn add_fleet_constraints(&mut self) -> usize {
        let before = self.row_names.len();
        let sc = self.sc;
        let nt = sc.nt();
        let deliveries = self.deliveries.clone();
        let raw = self.raw_links.clone();

        for d in &deliveries {
            let (s, c, p) = (d.s, d.c, d.p);
            let mut coefs: Vec<(usize, f64)> = (1..=nt)
                .map(|t| (self.idx(VarId::XDeCon { s, c, p, t }), 1.0))
                .collect();
            for lv in &d.vehicles {
                coefs.push((self.idx(VarId::XCDistb { s, c, p, v: lv.v }), -1.0));
            }
            let tag = format!(
                "{}_{}_{}",
                sc.sources[s].id, sc.consumers[c].id, sc.products[p].id
            );
            self.row(format!("dtotal_{tag}"), &coefs, Sense::Eq, 0.0);
        }
        for l in &raw {
            let (s, s2, p) = (l.s, l.s2, l.p);
            let mut coefs: Vec<(usize, f64)> = (1..=nt)
                .map(|t| (self.idx(VarId::XSSupl { s, s2, p, t }), 1.0))
                .collect();
            for lv in &l.vehicles {
                coefs.push((self.idx(VarId::XVSSupl { s, s2, p, v: lv.v }), -1.0));
            }
            let tag = format!(
                "{}_{}_{}",
                sc.sources[s].id, sc.sources[s2].id, sc.products[p].id
            );
            self.row(format!("rtotal_{tag}"), &coefs, Sense::Eq, 0.0);
        }

        for k in 0..self.fleets.len() {
            let (r, v, p) = self.fleets[k];
            let vq = sc.vehicles[v].capacity;
            let mut coefs = Vec::new();
            for d in deliveries
                .iter()
                .filter(|d| d.p == p && sc.sources[d.s].region == r)
            {
                if let Some(lv) = d.vehicles.iter().find(|lv| lv.v == v) {
                    let id = VarId::XCDistb {
                        s: d.s,
                        c: d.c,
                        p,
                        v,
                    };
                    coefs.push((self.idx(id), lv.rtt_hours / vq));
                }
            }
            for l in raw
                .iter()
                .filter(|l| l.p == p && sc.sources[l.s].region == r)
            {
                if let Some(lv) = l.vehicles.iter().find(|lv| lv.v == v) {
                    let id = VarId::XVSSupl {
                        s: l.s,
                        s2: l.s2,
                        p,
                        v,
                    };
                    coefs.push((self.idx(id), lv.rtt_hours / vq));
                }
            }
            coefs.push((self.idx(VarId::XVExQ { r, v, p }), -(nt as f64) / vq));
            let rhs = nt as f64 * sc.va(r, v, p) as f64;
            self.row(
                format!("timecap_{}", fleet_tag(sc, r, v, p)),
                &coefs,
                Sense::Le,
                rhs,
            );
        }

        for d in &deliveries {
            let (s, c, p) = (d.s, d.c, d.p);
            let tag = format!(
                "{}_{}_{}",
                sc.sources[s].id, sc.consumers[c].id, sc.products[p].id
            );
            for t in 1..=nt {
                let mut coefs: Vec<(usize, f64)> = d
                    .vehicles
                    .iter()
                    .map(|lv| {
                        (
                            self.idx(VarId::XPDl {
                                s,
                                c,
                                p,
                                v: lv.v,
                                t,
                            }),
                            1.0,
                        )
                    })
                    .collect();
                coefs.push((self.idx(VarId::XDeCon { s, c, p, t }), -1.0));
                self.row(format!("dsplit_{tag}_t{t:03}"), &coefs, Sense::Eq, 0.0);
            }
            for lv in &d.vehicles {
                let v = lv.v;
                let mut coefs: Vec<(usize, f64)> = (1..=nt)
                    .map(|t| (self.idx(VarId::XPDl { s, c, p, v, t }), 1.0))
                    .collect();
                coefs.push((self.idx(VarId::XCDistb { s, c, p, v }), -1.0));
                self.row(
                    format!("dvtotal_{tag}_{}", sc.vehicles[v].id),
                    &coefs,
                    Sense::Eq,
                    0.0,
                );
            }
        }
        for l in &raw {
            let (s, s2, p) = (l.s, l.s2, l.p);
            let tag = format!(
                "{}_{}_{}",
                sc.sources[s].id, sc.sources[s2].id, sc.products[p].id
            );
            for t in 1..=nt {
                let mut coefs: Vec<(usize, f64)> = l
                    .vehicles
                    .iter()
                    .map(|lv| {
                        (
                            self.idx(VarId::XRw {
                                s,
                                s2,
                                p,
                                v: lv.v,
                                t,
                            }),
                            1.0,
                        )
                    })
                    .collect();
                coefs.push((self.idx(VarId::XSSupl { s, s2, p, t }), -1.0));
                self.row(format!("rsplit_{tag}_t{t:03}"), &coefs, Sense::Eq, 0.0);
            }
            for lv in &l.vehicles {
                let v = lv.v;
                let mut coefs: Vec<(usize, f64)> = (1..=nt)
                    .map(|t| (self.idx(VarId::XRw { s, s2, p, v, t }), 1.0))
                    .collect();
                coefs.push((self.idx(VarId::XVSSupl { s, s2, p, v }), -1.0));
                self.row(
                    format!("rvtotal_{tag}_{}", sc.vehicles[v].id),
                    &coefs,
                    Sense::Eq,
                    0.0,
                );
            }
        }

        if self.opts.hourly_fleet_balance {
            for k in 0..self.fleets.len() {
                let (r, v, p) = self.fleets[k];
                let tag = fleet_tag(sc, r, v, p);
                // (column of the dispatch at period 1, round trip in periods)
                let mut trips: Vec<(VarId, usize)> = Vec::new();
                for d in deliveries
                    .iter()
                    .filter(|d| d.p == p && sc.sources[d.s].region == r)
                {
                    if let Some(lv) = d.vehicles.iter().find(|lv| lv.v == v) {
                        let id = VarId::XPDl {
                            s: d.s,
                            c: d.c,
                            p,
                            v,
                            t: 0,
                        };
                        trips.push((id, lv.rtt_periods));
                    }
                }
                for l in raw
                    .iter()
                    .filter(|l| l.p == p && sc.sources[l.s].region == r)
                {
                    if let Some(lv) = l.vehicles.iter().find(|lv| lv.v == v) {
                        let id = VarId::XRw {
                            s: l.s,
                            s2: l.s2,
                            p,
                            v,
                            t: 0,
                        };
                        trips.push((id, lv.rtt_periods));
                    }
                }
                let vq = sc.vehicles[v].capacity;
                self.row(
                    format!("fleet0_{tag}"),
                    &[
                        (self.idx(VarId::XVQ { r, v, p, t: 0 }), 1.0),
                        (self.idx(VarId::XVExQ { r, v, p }), -1.0),
                    ],
                    Sense::Eq,
                    vq * sc.va(r, v, p) as f64,
                );
                for t in 1..=nt {
                    let mut coefs = vec![
                        (self.idx(VarId::XVQ { r, v, p, t }), 1.0),
                        (self.idx(VarId::XVQ { r, v, p, t: t - 1 }), -1.0),
                    ];
                    for &(id, rtt) in &trips {
                        coefs.push((self.idx(at_period(id, t)), 1.0));
                        if t > rtt {
                            coefs.push((self.idx(at_period(id, t - rtt)), -1.0));
                        }
                    }
                    self.row(format!("fleet_{tag}_t{t:03}"), &coefs, Sense::Eq, 0.0);
                }
            }
        }
        self.record("fleet", before)
    }

    /// Objective coefficients per column: transport costs, inventory
    /// penalties and hired capacity.
    pub fn objective_vector(&self) -> Vec<f64> {
        let sc = self.sc;
        self.vars
            .iter()
            .map(|id| match *id {
                VarId::XCDistb { s, c, p, v } => sc.distribution_cost(s, c, p, v),
                VarId::XVSSupl { s, s2, p, v } => sc.raw_supply_cost(s, s2, p, v),
                VarId::XTVMinus { i, .. } => sc.inventories[i].target_penalty,
                VarId::XTVPlus { i, .. } if self.opts.penalize_target_excess => {
                    sc.inventories[i].target_penalty
                }
                VarId::XBCV { i, .. } => sc.inventories[i].buffer_penalty,
                VarId::XVExQ { v, p, .. } => {
                    sc.hire_cost(v, p).unwrap_or(0.0) / sc.vehicles[v].capacity
                }
                _ => 0.0,
            })
            .collect()
    }

    pub fn set_objective(&mut self) {
        for (j, c) in self.objective_vector().into_iter().enumerate() {
            self.lp.set_cost(j, c);
        }
    }

    pub fn finish(self) -> Result<MilpModel, LpError> {
        let lp = self.lp.build()?;
        let mip = MipProblem::new(lp, self.integer)?;
        let col_names = self.vars.iter().map(|v| v.name(self.sc)).collect();
        Ok(MilpModel {
            mip,
            vars: self.vars,
            col_names,
            row_names: self.row_names,
            row_families: self.row_families,
            unservable: self.unservable,
            options: self.opts,
            index: self.index,
        })
    }
}

fn fleet_tag(sc: &Scenario, r: RegionIdx, v: VehicleIdx, p: ProductIdx) -> String {
    format!(
        "{}_{}_{}",
        sc.regions[r], sc.vehicles[v].id, sc.products[p].id
    )
}

fn at_period(id: VarId, t: usize) -> VarId {
    match id {
        VarId::XPDl { s, c, p, v, .. } => VarId::XPDl { s, c, p, v, t },
        VarId::XRw { s, s2, p, v, .. } => VarId::XRw { s, s2, p, v, t },
        other => other,
    }
}
