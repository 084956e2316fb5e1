use std::cell::RefCell;

/// Epoch-stamped visited marks, reused across searches on the same thread.
pub(super) struct VisitedList {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedList {
    fn reset(&mut self, slots: usize) {
        if self.marks.len() < slots {
            self.marks.resize(slots, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Marks `i`; returns whether it was unmarked.
    #[inline]
    pub(super) fn insert(&mut self, i: u32) -> bool {
        let m = &mut self.marks[i as usize];
        if *m == self.epoch {
            false
        } else {
            *m = self.epoch;
            true
        }
    }

    #[inline]
    pub(super) fn contains(&self, i: u32) -> bool {
        self.marks[i as usize] == self.epoch
    }
}

thread_local! {
    static VISITED: RefCell<VisitedList> = const { RefCell::new(VisitedList { marks: Vec::new(), epoch: 0 }) };
}

/// Runs `f` with a cleared visited list covering `slots` labels.
pub(super) fn with_visited<R>(slots: usize, f: impl FnOnce(&mut VisitedList) -> R) -> R {
    VISITED.with(|cell| match cell.try_borrow_mut() {
        Ok(mut v) => {
            v.reset(slots);
            f(&mut v)
        }
        // Re-entrant use on one thread gets a private list.
        Err(_) => {
            let mut v = VisitedList { marks: Vec::new(), epoch: 0 };
            v.reset(slots);
            f(&mut v)
        }
    })
}
