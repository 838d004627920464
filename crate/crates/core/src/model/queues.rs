use std::collections::VecDeque;

use super::customer::HelpKind;

#[derive(Debug, Clone)]
pub struct Till {
    pub queue: VecDeque<usize>,
    /// Staff member manning the till.
    pub server: usize,
    /// Opened proactively by a non-cashier.
    pub temporary: bool,
}

/// All waiting lines of the department. Customers are stored by index.
#[derive(Debug, Clone, Default)]
pub struct QueueSet {
    pub tills: Vec<Till>,
    pub normal_help: VecDeque<usize>,
    pub expert_help: VecDeque<usize>,
    pub section_manager: VecDeque<usize>,
}

impl QueueSet {
    pub fn help(&self, kind: HelpKind) -> &VecDeque<usize> {
        match kind {
            HelpKind::Normal => &self.normal_help,
            HelpKind::Expert => &self.expert_help,
        }
    }

    pub fn help_mut(&mut self, kind: HelpKind) -> &mut VecDeque<usize> {
        match kind {
            HelpKind::Normal => &mut self.normal_help,
            HelpKind::Expert => &mut self.expert_help,
        }
    }

    pub fn open_tills(&self) -> usize {
        self.tills.len()
    }

    pub fn till_queue_lengths(&self) -> Vec<usize> {
        self.tills.iter().map(|t| t.queue.len()).collect()
    }

    pub fn shortest_till_queue(&self) -> Option<usize> {
        self.tills.iter().map(|t| t.queue.len()).min()
    }

    /// Index of the till a newcomer joins: shortest queue, lowest index on ties.
    pub fn shortest_till(&self) -> Option<usize> {
        self.tills
            .iter()
            .enumerate()
            .min_by_key(|(i, t)| (t.queue.len(), *i))
            .map(|(i, _)| i)
    }

    pub fn till_of(&self, staff: usize) -> Option<usize> {
        self.tills.iter().position(|t| t.server == staff)
    }

    /// Removes `customer` from whichever queue holds it.
    pub fn remove(&mut self, customer: usize) -> bool {
        fn take(q: &mut VecDeque<usize>, c: usize) -> bool {
            match q.iter().position(|&x| x == c) {
                Some(i) => {
                    q.remove(i);
                    true
                }
                None => false,
            }
        }
        for t in &mut self.tills {
            if take(&mut t.queue, customer) {
                return true;
            }
        }
        take(&mut self.normal_help, customer)
            || take(&mut self.expert_help, customer)
            || take(&mut self.section_manager, customer)
    }

    /// Moves customers from the back of the longest queues onto till `to`
    /// until no queue is more than one longer than it.
    pub fn rebalance_into(&mut self, to: usize) {
        loop {
            let (longest, len) = match self
                .tills
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != to)
                .max_by_key(|(i, t)| (t.queue.len(), usize::MAX - *i))
            {
                Some((i, t)) => (i, t.queue.len()),
                None => return,
            };
            if len <= self.tills[to].queue.len() + 1 {
                return;
            }
            let moved = self.tills[longest].queue.pop_back().expect("non-empty");
            self.tills[to].queue.push_back(moved);
        }
    }

    /// Closes till `idx`; its queue joins the remaining tills shortest-first
    /// in original order. Returns the closed till.
    pub fn close_till(&mut self, idx: usize) -> Till {
        let mut till = self.tills.remove(idx);
        while let Some(c) = till.queue.pop_front() {
            if let Some(t) = self.shortest_till() {
                self.tills[t].queue.push_back(c);
            } else {
                // Nowhere to go; caller must deal with stranded customers.
                till.queue.push_front(c);
                break;
            }
        }
        till
    }

    pub fn total_queued(&self) -> usize {
        self.tills.iter().map(|t| t.queue.len()).sum::<usize>()
            + self.normal_help.len()
            + self.expert_help.len()
            + self.section_manager.len()
    }

    pub fn contains(&self, customer: usize) -> usize {
        self.tills
            .iter()
            .filter(|t| t.queue.contains(&customer))
            .count()
            + [&self.normal_help, &self.expert_help, &self.section_manager]
                .iter()
                .filter(|q| q.contains(&customer))
                .count()
    }
}
