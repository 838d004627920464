//! One replication of a department: the customer pool, staff, queues and
//! the event loop that drives them.

use crate::behavior::{
    decide_next_action, draw_refund_visit, finalize_visit, sample_patience, score_on_leaving,
    score_on_reaching, Action, CustomerPool, LoopOutcome,
};
use crate::engine::{
    generate_arrivals, sample_bernoulli, sample_triangular, Scheduler, SimTime, Streams,
    TriangularDist, DAY_MINUTES,
};
use crate::error::ModelError;
use crate::metrics::{ReplicationResult, StaffSummary, VisitRecord, WeekStats};
use crate::model::{
    role_permitted, ActivityState, DepartmentConfig, HelpKind, LastStep, LoopWeights,
    ProactivityParams, Role, Rota, ServiceLoop, Staff, StaffActivity, StaffType, Till, Visit,
};
use crate::proactivity::{evaluate_role_swap, RoleAction, StaffView, SystemView};

/// What varies between runs of the same department.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSettings {
    pub rota: Rota,
    pub proactivity: ProactivityParams,
    pub weeks: u32,
    /// Keep a log of loop outcomes, visits and role actions.
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Arrival,
    BrowseDone { customer: usize, token: u32 },
    PatienceExpired { customer: usize, token: u32 },
    ServiceDone { customer: usize, token: u32 },
    StaffCheck { staff: usize, token: u32 },
    Reevaluate,
    DayStart(u32),
    DayEnd(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Loop {
        time: f64,
        customer: usize,
        service: ServiceLoop,
        outcome: LoopOutcome,
        score: i64,
    },
    Visit {
        time: f64,
        customer: usize,
        score: i64,
        loops: Vec<i64>,
        history: i64,
    },
    Role {
        time: f64,
        staff: usize,
        action: RoleAction,
    },
}

pub struct World {
    cfg: DepartmentConfig,
    settings: WorldSettings,
    sched: Scheduler<Ev>,
    streams: Streams,
    pool: CustomerPool,
    staff: Vec<Staff>,
    queues: crate::model::QueueSet,
    open: bool,
    day: u32,
    days: u32,
    /// Fixed arrival times replacing the generated stream.
    injected: Option<Vec<f64>>,
    /// Loop a customer is in, queued or being served.
    in_loop: Vec<Option<ServiceLoop>>,
    /// Visit score when the current loop started.
    loop_base: Vec<i64>,
    weeks: Vec<WeekStats>,
    activations: u64,
    completed: u64,
    transactions: u64,
    transactions_without_browse: u64,
    role_actions: u64,
    max_open_tills: usize,
    trace: Vec<TraceEvent>,
}

impl World {
    pub fn new(cfg: DepartmentConfig, settings: WorldSettings, seed: u64) -> Self {
        let mut streams = Streams::new(seed);
        let pool = CustomerPool::new(cfg.pool_size as usize, &cfg.mix, &mut streams.population);
        Self::build(cfg, settings, streams, pool, None)
    }

    /// A world whose arrivals happen exactly at `arrivals` (absolute
    /// minutes) instead of being generated. Used to build traces by hand.
    pub fn with_arrivals(
        cfg: DepartmentConfig,
        settings: WorldSettings,
        seed: u64,
        pool: CustomerPool,
        arrivals: Vec<f64>,
    ) -> Self {
        let streams = Streams::new(seed);
        Self::build(cfg, settings, streams, pool, Some(arrivals))
    }

    fn build(
        cfg: DepartmentConfig,
        settings: WorldSettings,
        streams: Streams,
        pool: CustomerPool,
        injected: Option<Vec<f64>>,
    ) -> Self {
        let mut staff = Vec::new();
        for t in StaffType::ALL {
            for _ in 0..settings.rota.count(t) {
                staff.push(Staff::new(staff.len(), t));
            }
        }
        let n = pool.len();
        let days = settings.weeks * cfg.days_per_week;
        Self {
            weeks: vec![WeekStats::default(); settings.weeks as usize],
            cfg,
            settings,
            sched: Scheduler::new(),
            streams,
            pool,
            staff,
            queues: Default::default(),
            open: false,
            day: 0,
            days,
            injected,
            in_loop: vec![None; n],
            loop_base: vec![0; n],
            activations: 0,
            completed: 0,
            transactions: 0,
            transactions_without_browse: 0,
            role_actions: 0,
            max_open_tills: 0,
            trace: Vec::new(),
        }
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn pool(&self) -> &CustomerPool {
        &self.pool
    }

    pub fn staff(&self) -> &[Staff] {
        &self.staff
    }

    /// Runs every day of the horizon to completion.
    pub fn run(&mut self) -> Result<ReplicationResult, ModelError> {
        if self.days > 0 {
            self.sched.schedule(SimTime::ZERO, Ev::DayStart(0))?;
        }
        if let Some(times) = self.injected.clone() {
            for t in times {
                self.sched.schedule(SimTime(t), Ev::Arrival)?;
            }
        }
        while let Some(ev) = self.sched.advance_to_next() {
            self.dispatch(ev.kind)?;
        }
        Ok(self.result())
    }

    fn result(&self) -> ReplicationResult {
        ReplicationResult {
            seed: self.streams.arrivals.seed(),
            weeks: self.weeks.clone(),
            days: self.days,
            staff: self
                .staff
                .iter()
                .map(|s| StaffSummary {
                    id: s.id,
                    assigned: s.assigned,
                    busy_by_role: s.busy_by_role,
                    idle_minutes: s.idle_minutes,
                    swap_count: s.swap_count,
                    swap_durations: s.swap_durations.clone(),
                })
                .collect(),
            activations: self.activations,
            completed_visits: self.completed,
            in_store: self.pool.in_store() as u64,
            dropped_arrivals: self.pool.dropped_arrivals,
            transactions: self.transactions,
            transactions_without_browse: self.transactions_without_browse,
            role_actions: self.role_actions,
            max_open_tills: self.max_open_tills,
        }
    }

    fn now(&self) -> f64 {
        self.sched.now().0
    }

    fn week_of_day(&self, day: u32) -> usize {
        ((day / self.cfg.days_per_week) as usize).min(self.weeks.len().saturating_sub(1))
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), ModelError> {
        match ev {
            Ev::DayStart(d) => self.day_start(d),
            Ev::DayEnd(_) => self.day_end(),
            Ev::Arrival => self.arrival(),
            Ev::BrowseDone { customer, token } => {
                if self.pool.customers[customer].token != token {
                    return Ok(());
                }
                let c = &mut self.pool.customers[customer];
                c.has_browsed = true;
                c.state = ActivityState::Contemplating;
                c.visit.as_mut().expect("visit in progress").last = LastStep::Browsed;
                self.contemplate(customer)
            }
            Ev::PatienceExpired { customer, token } => {
                if self.pool.customers[customer].token != token {
                    return Ok(());
                }
                self.abandon(customer, LoopOutcome::AbandonedAfterWait)
            }
            Ev::ServiceDone { customer, token } => {
                if self.pool.customers[customer].token != token {
                    return Ok(());
                }
                self.service_done(customer)
            }
            Ev::StaffCheck { staff, token } => {
                let s = &self.staff[staff];
                if s.check_token == token && s.is_idle() && self.open {
                    self.evaluate(staff, false)?;
                }
                Ok(())
            }
            Ev::Reevaluate => {
                if self.open {
                    for id in 0..self.staff.len() {
                        if self.staff[id].is_idle() {
                            self.evaluate(id, false)?;
                        }
                    }
                }
                Ok(())
            }
        }
    }

    // ---- day boundaries ------------------------------------------------

    fn day_start(&mut self, d: u32) -> Result<(), ModelError> {
        let start = f64::from(d) * DAY_MINUTES;
        self.day = d;
        self.open = true;
        self.sched
            .schedule(SimTime(start + self.cfg.opening_minutes), Ev::DayEnd(d))?;
        if d + 1 < self.days {
            self.sched
                .schedule(SimTime(start + DAY_MINUTES), Ev::DayStart(d + 1))?;
        }
        if self.injected.is_none() {
            let offsets = generate_arrivals(&self.cfg.arrival_profile, &mut self.streams.arrivals);
            for off in offsets {
                self.sched.schedule(SimTime(start + off), Ev::Arrival)?;
            }
        }
        self.daily_staff_activation();
        for id in 0..self.staff.len() {
            self.evaluate(id, false)?;
        }
        Ok(())
    }

    /// Everyone on the rota comes on duty in their assigned role; one till
    /// per rostered cashier.
    fn daily_staff_activation(&mut self) {
        let now = self.now();
        self.queues = Default::default();
        for s in &mut self.staff {
            s.role = s.assigned.role();
            s.temp_cashier_served = 0;
            s.swap_started = None;
            s.till = None;
            s.activity = StaffActivity::Idle { since: now };
            if s.assigned == StaffType::Cashier {
                s.till = Some(self.queues.tills.len());
                self.queues.tills.push(Till {
                    queue: Default::default(),
                    server: s.id,
                    temporary: false,
                });
            }
        }
        self.max_open_tills = self.max_open_tills.max(self.queues.open_tills());
    }

    fn day_end(&mut self) -> Result<(), ModelError> {
        self.open = false;
        let mut queued: Vec<usize> = Vec::new();
        for t in &mut self.queues.tills {
            queued.extend(t.queue.drain(..));
        }
        queued.extend(self.queues.normal_help.drain(..));
        queued.extend(self.queues.expert_help.drain(..));
        queued.extend(self.queues.section_manager.drain(..));
        for c in queued {
            self.abandon(c, LoopOutcome::FlushedAtClose)?;
        }
        let now = self.now();
        self.queues.tills.clear();
        for id in 0..self.staff.len() {
            if self.staff[id].is_temp_cashier() {
                self.staff[id].revert_to_assigned(now);
            }
            self.staff[id].check_token = self.staff[id].check_token.wrapping_add(1);
            if self.staff[id].is_idle() {
                self.end_idle(id);
                self.staff[id].activity = StaffActivity::OffDuty;
            }
        }
        Ok(())
    }

    // ---- customers -----------------------------------------------------

    fn arrival(&mut self) -> Result<(), ModelError> {
        if !self.open {
            return Ok(());
        }
        self.activations += 1;
        let Some(id) = self.pool.pick_resting_customer(&mut self.streams.pool) else {
            return Ok(());
        };
        let refund = draw_refund_visit(
            self.pool.customers[id].kind,
            &self.cfg,
            &mut self.streams.decisions,
        );
        let now = self.now();
        let c = &mut self.pool.customers[id];
        c.state = ActivityState::Entering;
        c.has_browsed = false;
        c.visit = Some(Visit::new(now, self.day, refund));
        c.state = ActivityState::Contemplating;
        self.contemplate(id)
    }

    fn contemplate(&mut self, id: usize) -> Result<(), ModelError> {
        let action = decide_next_action(
            &self.pool.customers[id],
            &self.cfg,
            &mut self.streams.decisions,
            self.open,
        );
        match action {
            Action::Browse => {
                let d = sample_triangular(&self.cfg.durations.browse, &mut self.streams.durations);
                let c = &mut self.pool.customers[id];
                c.state = ActivityState::Browsing;
                let token = c.bump_token();
                self.sched.schedule_in(
                    d,
                    Ev::BrowseDone {
                        customer: id,
                        token,
                    },
                )?;
                Ok(())
            }
            Action::SeekHelp => self.seek_help(id),
            Action::QueueToPay => self.seek_till(id, ServiceLoop::Pay),
            Action::SeekRefund => self.seek_till(id, ServiceLoop::Refund),
            Action::Leave => self.leave(id),
        }
    }

    fn weights(&self, l: ServiceLoop) -> LoopWeights {
        let w = &self.cfg.satisfaction_weights;
        match l {
            ServiceLoop::Help(_) => w.help,
            ServiceLoop::Pay => w.pay,
            ServiceLoop::Refund | ServiceLoop::Authorization => w.refund,
        }
    }

    fn add_score(&mut self, id: usize, delta: i64) {
        self.pool.customers[id].ledger.current_visit += delta;
    }

    fn start_loop(&mut self, id: usize, l: ServiceLoop) {
        self.in_loop[id] = Some(l);
        self.loop_base[id] = self.pool.customers[id].ledger.current_visit;
        let now = self.now();
        let v = self.pool.customers[id]
            .visit
            .as_mut()
            .expect("visit in progress");
        v.loop_waited = false;
        v.queue_entered_at = now;
    }

    fn end_loop(&mut self, id: usize, outcome: LoopOutcome) {
        let l = self.in_loop[id].take().expect("customer in a loop");
        let c = &mut self.pool.customers[id];
        let score = c.ledger.current_visit - self.loop_base[id];
        c.visit
            .as_mut()
            .expect("visit in progress")
            .loop_scores
            .push(score);
        if self.settings.trace {
            self.trace.push(TraceEvent::Loop {
                time: self.sched.now().0,
                customer: id,
                service: l,
                outcome,
                score,
            });
        }
    }

    fn join_queue(
        &mut self,
        id: usize,
        l: ServiceLoop,
        patience: TriangularDist,
    ) -> Result<(), ModelError> {
        let wait = sample_patience(
            &self.pool.customers[id],
            patience,
            &mut self.streams.durations,
        );
        let now = self.now();
        let c = &mut self.pool.customers[id];
        c.waiting_in = Some(l);
        c.state = match l {
            ServiceLoop::Help(_) => ActivityState::QueuingForHelp,
            ServiceLoop::Pay => ActivityState::QueuingToPay,
            ServiceLoop::Refund | ServiceLoop::Authorization => ActivityState::QueuingForRefund,
        };
        let token = c.bump_token();
        let v = c.visit.as_mut().expect("visit in progress");
        v.queue_entered_at = now;
        self.sched.schedule_in(
            wait,
            Ev::PatienceExpired {
                customer: id,
                token,
            },
        )?;
        Ok(())
    }

    fn seek_help(&mut self, id: usize) -> Result<(), ModelError> {
        let kind = self.pool.customers[id].kind;
        let share = self.cfg.probabilities.expert_share(kind);
        let help = if sample_bernoulli(share, &mut self.streams.decisions) {
            HelpKind::Expert
        } else {
            HelpKind::Normal
        };
        let l = ServiceLoop::Help(help);
        self.start_loop(id, l);
        let c = &mut self.pool.customers[id];
        c.state = ActivityState::SeekingHelp;
        c.visit.as_mut().expect("visit in progress").help_requests += 1;
        let server = self.idle_helper(help);
        let w = self.weights(l);
        self.add_score(id, score_on_reaching(w, server.is_some()));
        match server {
            Some((s, role)) => {
                let d = sample_triangular(
                    &self.cfg.durations.help_service,
                    &mut self.streams.durations,
                );
                self.begin_service(s, id, role, d)
            }
            None => {
                let v = self.pool.customers[id]
                    .visit
                    .as_mut()
                    .expect("visit in progress");
                v.loop_waited = true;
                v.help_waits += 1;
                self.queues.help_mut(help).push_back(id);
                self.join_queue(id, l, self.cfg.patience.help_queue)
            }
        }
    }

    /// Idle staff member who can take a help request straight away. Experts
    /// only cover normal requests when proactive.
    fn idle_helper(&self, kind: HelpKind) -> Option<(usize, Role)> {
        let idle_in = |role: Role| {
            self.staff
                .iter()
                .find(|s| s.is_idle() && s.role == role && s.assigned.role() == role)
                .map(|s| s.id)
        };
        match kind {
            HelpKind::Expert => idle_in(Role::Expert).map(|s| (s, Role::Expert)),
            HelpKind::Normal => idle_in(Role::Normal)
                .map(|s| (s, Role::Normal))
                .or_else(|| {
                    if self.settings.proactivity.enabled {
                        idle_in(Role::Expert).map(|s| (s, Role::Normal))
                    } else {
                        None
                    }
                }),
        }
    }

    fn seek_till(&mut self, id: usize, l: ServiceLoop) -> Result<(), ModelError> {
        if l == ServiceLoop::Pay && !self.pool.customers[id].has_browsed {
            return Err(ModelError::PayWithoutBrowse { customer: id });
        }
        self.start_loop(id, l);
        let c = &mut self.pool.customers[id];
        c.state = if l == ServiceLoop::Pay {
            ActivityState::QueuingToPay
        } else {
            ActivityState::SeekingRefund
        };
        if l == ServiceLoop::Pay {
            c.visit.as_mut().expect("visit in progress").pay_attempts += 1;
        }
        let free = self
            .queues
            .tills
            .iter()
            .position(|t| t.queue.is_empty() && self.staff[t.server].is_idle());
        let w = self.weights(l);
        self.add_score(id, score_on_reaching(w, free.is_some()));
        if let Some(t) = free {
            let server = self.queues.tills[t].server;
            let d = self.till_duration(l);
            return self.begin_service(server, id, Role::Cashier, d);
        }
        let Some(t) = self.queues.shortest_till() else {
            // No till open at all: nobody can serve, leave at once.
            return self.abandon_unqueued(id, l);
        };
        let v = self.pool.customers[id]
            .visit
            .as_mut()
            .expect("visit in progress");
        v.loop_waited = true;
        if l == ServiceLoop::Pay {
            v.pay_waits += 1;
        }
        self.queues.tills[t].queue.push_back(id);
        let patience = if l == ServiceLoop::Pay {
            self.cfg.patience.pay_queue
        } else {
            self.cfg.patience.refund_queue
        };
        self.join_queue(id, l, patience)
    }

    fn till_duration(&mut self, l: ServiceLoop) -> f64 {
        let d = if l == ServiceLoop::Pay {
            self.cfg.durations.pay_service
        } else {
            self.cfg.durations.refund_service
        };
        sample_triangular(&d, &mut self.streams.durations)
    }

    fn abandon_unqueued(&mut self, id: usize, l: ServiceLoop) -> Result<(), ModelError> {
        self.pool.customers[id].waiting_in = Some(l);
        self.abandon(id, LoopOutcome::AbandonedAfterWait)
    }

    /// Ends a wait without service: patience ran out or the store closed.
    fn abandon(&mut self, id: usize, outcome: LoopOutcome) -> Result<(), ModelError> {
        let now = self.now();
        let l = self.pool.customers[id]
            .waiting_in
            .take()
            .expect("customer is waiting");
        self.queues.remove(id);
        let w = self.weights(l);
        self.add_score(id, score_on_leaving(w, outcome));
        let c = &mut self.pool.customers[id];
        c.bump_token();
        let v = c.visit.as_mut().expect("visit in progress");
        let waited = now - v.queue_entered_at;
        match l {
            ServiceLoop::Help(kind) => {
                v.help_wait_minutes += waited;
                v.help_block_minutes += waited;
                match kind {
                    HelpKind::Normal => v.abandoned_normal_help = true,
                    HelpKind::Expert => v.abandoned_expert_help = true,
                }
                v.last = LastStep::HelpAbandoned;
            }
            ServiceLoop::Pay => {
                v.pay_wait_minutes += waited;
                v.pay_block_minutes += waited;
                v.abandoned_pay = true;
                v.last = LastStep::PayAbandoned;
            }
            ServiceLoop::Refund | ServiceLoop::Authorization => v.last = LastStep::RefundAbandoned,
        }
        c.state = ActivityState::Contemplating;
        self.end_loop(id, outcome);
        self.contemplate(id)
    }

    fn leave(&mut self, id: usize) -> Result<(), ModelError> {
        let now = self.now();
        let rule = self.cfg.patience.modifier;
        let c = &mut self.pool.customers[id];
        c.state = ActivityState::Leaving;
        let v = c.visit.clone().expect("visit in progress");
        let out = finalize_visit(c, &rule);
        let record = VisitRecord {
            minutes: now - v.arrived_at,
            purchased: v.purchased,
            abandoned_normal_help: v.abandoned_normal_help,
            abandoned_expert_help: v.abandoned_expert_help,
            abandoned_pay: v.abandoned_pay,
            experience: out.classification,
            history: out.history_class,
            help_requests: v.help_requests,
            help_waits: v.help_waits,
            help_wait_minutes: v.help_wait_minutes,
            help_block_minutes: v.help_block_minutes,
            pay_attempts: v.pay_attempts,
            pay_waits: v.pay_waits,
            pay_wait_minutes: v.pay_wait_minutes,
            pay_block_minutes: v.pay_block_minutes,
        };
        let week = self.week_of_day(v.day);
        self.weeks[week].record_visit(&record);
        self.completed += 1;
        if self.settings.trace {
            self.trace.push(TraceEvent::Visit {
                time: now,
                customer: id,
                score: out.score,
                loops: v.loop_scores,
                history: self.pool.customers[id].ledger.accumulated,
            });
        }
        self.pool.return_to_rest(id);
        Ok(())
    }

    // ---- service -------------------------------------------------------

    fn end_idle(&mut self, s: usize) {
        let now = self.now();
        if let StaffActivity::Idle { since } = self.staff[s].activity {
            let idle = now - since;
            self.staff[s].idle_minutes += idle;
            let week = self.week_of_day(self.day);
            self.weeks[week].idle[self.staff[s].assigned.index()] += idle;
        }
    }

    fn begin_service(
        &mut self,
        s: usize,
        c: usize,
        role: Role,
        duration: f64,
    ) -> Result<(), ModelError> {
        if !self.staff[s].is_idle() {
            return Err(ModelError::StaffNotIdle { staff: s });
        }
        if !role_permitted(self.staff[s].assigned, role) {
            return Err(ModelError::RoleQueueMismatch {
                staff: s,
                role: role.name(),
            });
        }
        self.end_idle(s);
        let now = self.now();
        let st = &mut self.staff[s];
        st.activity = StaffActivity::Busy {
            customer: c,
            role,
            until: now + duration,
        };
        st.busy_by_role[role.index()] += duration;
        st.check_token = st.check_token.wrapping_add(1);
        let assigned = st.assigned.index();
        let week = self.week_of_day(self.day);
        self.weeks[week].busy[assigned] += duration;

        let cust = &mut self.pool.customers[c];
        cust.server = Some(s);
        cust.state = match self.in_loop[c] {
            Some(ServiceLoop::Help(_)) => ActivityState::GettingHelp,
            Some(ServiceLoop::Pay) => ActivityState::Paying,
            _ => ActivityState::GettingRefund,
        };
        if let Some(l) = cust.waiting_in.take() {
            let v = cust.visit.as_mut().expect("visit in progress");
            let waited = now - v.queue_entered_at;
            match l {
                ServiceLoop::Help(_) => v.help_wait_minutes += waited,
                ServiceLoop::Pay => v.pay_wait_minutes += waited,
                _ => {}
            }
        }
        let token = cust.bump_token();
        self.sched
            .schedule_in(duration, Ev::ServiceDone { customer: c, token })?;
        Ok(())
    }

    fn service_done(&mut self, c: usize) -> Result<(), ModelError> {
        let now = self.now();
        let s = self.pool.customers[c]
            .server
            .take()
            .expect("customer being served");
        let l = self.in_loop[c].expect("customer in a loop");
        let role = match self.staff[s].activity {
            StaffActivity::Busy { role, .. } => role,
            _ => return Err(ModelError::StaffNotIdle { staff: s }),
        };
        if role == Role::Cashier && self.staff[s].is_temp_cashier() {
            self.staff[s].temp_cashier_served += 1;
        }
        self.staff[s].activity = StaffActivity::Idle { since: now };

        let w = self.weights(l);
        let mut finished = true;
        match l {
            ServiceLoop::Help(_) => {
                let v = self.pool.customers[c]
                    .visit
                    .as_mut()
                    .expect("visit in progress");
                v.help_block_minutes += now - v.queue_entered_at;
                v.last = LastStep::HelpServed;
            }
            ServiceLoop::Pay => {
                let cust = &mut self.pool.customers[c];
                if !cust.has_browsed {
                    self.transactions_without_browse += 1;
                }
                let v = cust.visit.as_mut().expect("visit in progress");
                v.pay_block_minutes += now - v.queue_entered_at;
                v.purchased = true;
                v.last = LastStep::Paid;
                self.transactions += 1;
            }
            ServiceLoop::Refund => {
                let p = self.cfg.probabilities.refund_needs_authorization;
                if sample_bernoulli(p, &mut self.streams.decisions) {
                    finished = false;
                    self.request_authorization(c)?;
                } else {
                    self.pool.customers[c]
                        .visit
                        .as_mut()
                        .expect("visit in progress")
                        .last = LastStep::RefundCompleted;
                }
            }
            ServiceLoop::Authorization => {
                self.pool.customers[c]
                    .visit
                    .as_mut()
                    .expect("visit in progress")
                    .last = LastStep::RefundCompleted;
            }
        }
        if finished {
            let waited = self.pool.customers[c]
                .visit
                .as_ref()
                .is_some_and(|v| v.loop_waited);
            self.add_score(c, score_on_leaving(w, LoopOutcome::ServedImmediately));
            let outcome = if waited {
                LoopOutcome::ServedAfterWait
            } else {
                LoopOutcome::ServedImmediately
            };
            self.end_loop(c, outcome);
            self.pool.customers[c].state = ActivityState::Contemplating;
        }

        // The staff member is free again before the customer moves on.
        if self.open {
            self.evaluate(s, false)?;
        } else {
            self.end_idle(s);
            self.staff[s].activity = StaffActivity::OffDuty;
        }
        if finished {
            self.contemplate(c)?;
        }
        Ok(())
    }

    /// Second step of a refund. The reaching score was taken at the till;
    /// this step only decides between served and abandoned.
    fn request_authorization(&mut self, c: usize) -> Result<(), ModelError> {
        self.in_loop[c] = Some(ServiceLoop::Authorization);
        let expert = if self.settings.proactivity.enabled && self.open {
            self.staff
                .iter()
                .find(|s| s.is_idle() && s.assigned == StaffType::Expert && s.role == Role::Expert)
                .map(|s| s.id)
        } else {
            None
        };
        match expert {
            Some(s) => {
                let d = sample_triangular(
                    &self.cfg.durations.authorization,
                    &mut self.streams.durations,
                );
                self.begin_service(s, c, Role::SectionManager, d)
            }
            None if self.open => {
                self.pool.customers[c]
                    .visit
                    .as_mut()
                    .expect("visit in progress")
                    .loop_waited = true;
                self.queues.section_manager.push_back(c);
                self.join_queue(
                    c,
                    ServiceLoop::Authorization,
                    self.cfg.patience.refund_queue,
                )
            }
            None => {
                self.pool.customers[c].waiting_in = Some(ServiceLoop::Authorization);
                self.abandon(c, LoopOutcome::FlushedAtClose)
            }
        }
    }

    // ---- staff decisions -----------------------------------------------

    /// Integer threshold for a possibly fractional parameter: the fraction
    /// is the probability of rounding up.
    fn resolve_threshold(&mut self, x: f64) -> usize {
        let base = x.floor().max(0.0);
        let frac = x - base;
        let up = frac > 0.0 && self.streams.staff.uniform() < frac;
        base as usize + usize::from(up)
    }

    fn system_view(&mut self, s: usize, just_released: bool) -> SystemView {
        let p = self.settings.proactivity;
        let (open_threshold, close_threshold) = if p.enabled {
            (
                self.resolve_threshold(p.p2_open_threshold),
                self.resolve_threshold(p.p2_close_threshold),
            )
        } else {
            (0, 0)
        };
        let assigned = self.staff[s].assigned;
        SystemView {
            till_queues: self.queues.till_queue_lengths(),
            own_till_queue: self
                .queues
                .till_of(s)
                .map(|t| self.queues.tills[t].queue.len()),
            normal_queue: self.queues.normal_help.len(),
            expert_queue: self.queues.expert_help.len(),
            section_manager_queue: self.queues.section_manager.len(),
            same_type_in_role: self
                .staff
                .iter()
                .filter(|o| o.on_duty() && o.assigned == assigned && o.role == assigned.role())
                .count(),
            open_threshold,
            close_threshold,
            just_released,
        }
    }

    fn evaluate(&mut self, s: usize, just_released: bool) -> Result<(), ModelError> {
        if !self.open || !self.staff[s].is_idle() {
            return Ok(());
        }
        let view = self.system_view(s, just_released);
        let st = &self.staff[s];
        let me = StaffView {
            assigned: st.assigned,
            role: st.role,
            temp_cashier_served: st.temp_cashier_served,
        };
        let action = evaluate_role_swap(&me, &view, &self.settings.proactivity);
        if action != RoleAction::WaitAndRecheck && action != RoleAction::ServeOwnQueue {
            self.role_actions += 1;
        }
        if self.settings.trace {
            self.trace.push(TraceEvent::Role {
                time: self.now(),
                staff: s,
                action,
            });
        }
        match action {
            RoleAction::RevertToAssigned | RoleAction::CloseTillAndReassign => {
                self.release_till(s)?;
                self.evaluate(s, true)
            }
            RoleAction::ServeAsSectionManager => {
                let c = self
                    .queues
                    .section_manager
                    .pop_front()
                    .expect("section manager queue");
                let d = sample_triangular(
                    &self.cfg.durations.authorization,
                    &mut self.streams.durations,
                );
                self.begin_service(s, c, Role::SectionManager, d)
            }
            RoleAction::OpenTillAsTempCashier => {
                let now = self.now();
                let idx = self.queues.tills.len();
                self.queues.tills.push(Till {
                    queue: Default::default(),
                    server: s,
                    temporary: true,
                });
                self.queues.rebalance_into(idx);
                self.staff[s].start_temp_cashier(now, idx);
                self.max_open_tills = self.max_open_tills.max(self.queues.open_tills());
                if self.queues.tills[idx].queue.is_empty() {
                    self.release_till(s)?;
                    self.evaluate(s, true)
                } else {
                    self.serve_till_head(s)
                }
            }
            RoleAction::ServeOwnQueue => match self.staff[s].role {
                Role::Cashier => self.serve_till_head(s),
                Role::Normal => self.serve_help_head(s, HelpKind::Normal, Role::Normal),
                Role::Expert => self.serve_help_head(s, HelpKind::Expert, Role::Expert),
                Role::SectionManager => Err(ModelError::RoleQueueMismatch {
                    staff: s,
                    role: Role::SectionManager.name(),
                }),
            },
            RoleAction::ServeNormalQueueAsExpert => {
                self.serve_help_head(s, HelpKind::Normal, Role::Normal)
            }
            RoleAction::WaitAndRecheck => {
                let st = &mut self.staff[s];
                st.check_token = st.check_token.wrapping_add(1);
                let token = st.check_token;
                let dt = self.settings.proactivity.p6_check_interval;
                self.sched
                    .schedule_in(dt, Ev::StaffCheck { staff: s, token })?;
                Ok(())
            }
        }
    }

    /// A temporary cashier hands the till back; its queue moves to the
    /// remaining tills.
    fn release_till(&mut self, s: usize) -> Result<(), ModelError> {
        let now = self.now();
        if let Some(t) = self.queues.till_of(s) {
            let moved = !self.queues.tills[t].queue.is_empty();
            let closed = self.queues.close_till(t);
            for c in closed.queue {
                // Only possible with no other till open.
                self.abandon(c, LoopOutcome::AbandonedAfterWait)?;
            }
            if moved {
                self.sched.schedule_in(0.0, Ev::Reevaluate)?;
            }
        }
        self.staff[s].revert_to_assigned(now);
        Ok(())
    }

    fn serve_till_head(&mut self, s: usize) -> Result<(), ModelError> {
        let t = self
            .queues
            .till_of(s)
            .ok_or(ModelError::RoleQueueMismatch {
                staff: s,
                role: Role::Cashier.name(),
            })?;
        let c = self.queues.tills[t].queue.pop_front().expect("till queue");
        let l = self.in_loop[c].expect("queued customer in a loop");
        let d = self.till_duration(l);
        self.begin_service(s, c, Role::Cashier, d)
    }

    fn serve_help_head(&mut self, s: usize, kind: HelpKind, role: Role) -> Result<(), ModelError> {
        let c = self.queues.help_mut(kind).pop_front().expect("help queue");
        let d = sample_triangular(
            &self.cfg.durations.help_service,
            &mut self.streams.durations,
        );
        self.begin_service(s, c, role, d)
    }
}
