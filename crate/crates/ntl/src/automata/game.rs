//! Min-parity games and a recursive attractor-based solver.
//!
//! Convention used throughout the crate: on infinite plays the lowest
//! priority occurring infinitely often decides, even is a win for Verifier;
//! a player unable to move loses immediately.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Verifier,
    Pathfinder,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Verifier => Player::Pathfinder,
            Player::Pathfinder => Player::Verifier,
        }
    }

    /// The player who wins infinite plays whose minimal recurring priority is `p`.
    pub fn of_priority(p: u32) -> Player {
        if p % 2 == 0 {
            Player::Verifier
        } else {
            Player::Pathfinder
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParityGame {
    pub owner: Vec<Player>,
    pub priority: Vec<u32>,
    pub moves: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub winner: Vec<Player>,
    /// For a position won by its owner: the move to play. `None` on positions
    /// won by the opponent or without moves.
    pub strategy: Vec<Option<usize>>,
}

impl ParityGame {
    pub fn new() -> ParityGame {
        ParityGame { owner: Vec::new(), priority: Vec::new(), moves: Vec::new() }
    }

    pub fn add_position(&mut self, owner: Player, priority: u32) -> usize {
        self.owner.push(owner);
        self.priority.push(priority);
        self.moves.push(Vec::new());
        self.owner.len() - 1
    }

    pub fn add_move(&mut self, from: usize, to: usize) {
        self.moves[from].push(to);
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    /// Zielonka's recursive algorithm with positional strategy extraction.
    pub fn solve(&self) -> Solution {
        let n = self.len();
        let preds = self.predecessor_lists();
        let mut winner = vec![Player::Verifier; n];
        let mut strategy = vec![None; n];
        let mut alive = vec![true; n];
        self.solve_rec(&mut alive, &preds, &mut winner, &mut strategy);
        Solution { winner, strategy }
    }

    fn predecessor_lists(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.len()];
        for (v, succs) in self.moves.iter().enumerate() {
            for &u in succs {
                preds[u].push(v);
            }
        }
        preds
    }

    fn solve_rec(
        &self,
        alive: &mut Vec<bool>,
        preds: &[Vec<usize>],
        winner: &mut Vec<Player>,
        strategy: &mut Vec<Option<usize>>,
    ) {
        // a position whose owner cannot move is won by the opponent; peel
        // those off (with their attractors) so the core below never sees
        // dead ends
        for stuck_owner in [Player::Verifier, Player::Pathfinder] {
            let dead: Vec<usize> = (0..self.len())
                .filter(|&v| {
                    alive[v]
                        && self.owner[v] == stuck_owner
                        && !self.moves[v].iter().any(|&u| alive[u])
                })
                .collect();
            if dead.is_empty() {
                continue;
            }
            let w = stuck_owner.opponent();
            let (region, strat) = self.attractor(&dead, w, alive, preds);
            for &v in &region {
                winner[v] = w;
                if self.owner[v] == w {
                    strategy[v] = strat[v];
                }
                alive[v] = false;
            }
            self.solve_rec(alive, preds, winner, strategy);
            return;
        }
        let Some(p) = (0..self.len()).filter(|&v| alive[v]).map(|v| self.priority[v]).min()
        else {
            return;
        };
        let us = Player::of_priority(p);
        let targets: Vec<usize> = (0..self.len())
            .filter(|&v| alive[v] && self.priority[v] == p)
            .collect();
        let (region_a, strat_a) = self.attractor(&targets, us, alive, preds);

        // solve the subgame without the attractor
        let mut sub_alive = alive.clone();
        for &v in &region_a {
            sub_alive[v] = false;
        }
        self.solve_rec(&mut sub_alive, preds, winner, strategy);

        let opp_won: Vec<usize> = (0..self.len())
            .filter(|&v| alive[v] && !region_a.contains(&v) && winner[v] == us.opponent())
            .collect();
        if opp_won.is_empty() {
            // everything alive is won by `us`
            for &v in &region_a {
                winner[v] = us;
                if self.owner[v] == us {
                    strategy[v] = strat_a[v].or_else(|| {
                        // free choice on the minimal-priority core: any alive move
                        self.moves[v].iter().copied().find(|&u| alive[u])
                    });
                }
            }
            for v in 0..self.len() {
                if alive[v] {
                    winner[v] = us;
                }
            }
        } else {
            // the opponent extends their subgame win by attraction
            let (region_b, strat_b) = self.attractor(&opp_won, us.opponent(), alive, preds);
            for &v in &region_b {
                winner[v] = us.opponent();
                if self.owner[v] == us.opponent() && !opp_won.contains(&v) {
                    strategy[v] = strat_b[v];
                }
            }
            let mut rest_alive = alive.clone();
            for &v in &region_b {
                rest_alive[v] = false;
            }
            self.solve_rec(&mut rest_alive, preds, winner, strategy);
        }
    }

    /// All alive positions from which `player` can force reaching `targets`,
    /// together with the forcing move per attracted position of `player`.
    fn attractor(
        &self,
        targets: &[usize],
        player: Player,
        alive: &[bool],
        preds: &[Vec<usize>],
    ) -> (Vec<usize>, Vec<Option<usize>>) {
        let n = self.len();
        let mut inside = vec![false; n];
        let mut strat = vec![None; n];
        let mut queue: Vec<usize> = Vec::new();
        for &v in targets {
            if alive[v] && !inside[v] {
                inside[v] = true;
                queue.push(v);
            }
        }
        // count of alive successors not yet attracted, for opponent positions
        let mut escape: Vec<usize> = (0..n)
            .map(|v| self.moves[v].iter().filter(|&&u| alive[u]).count())
            .collect();
        let mut qi = 0;
        while qi < queue.len() {
            let u = queue[qi];
            qi += 1;
            for &v in &preds[u] {
                if !alive[v] || inside[v] {
                    continue;
                }
                if self.owner[v] == player {
                    inside[v] = true;
                    strat[v] = Some(u);
                    queue.push(v);
                } else {
                    escape[v] -= 1;
                    if escape[v] == 0 {
                        inside[v] = true;
                        queue.push(v);
                    }
                }
            }
        }
        (queue, strat)
    }
}

impl Default for ParityGame {
    fn default() -> Self {
        ParityGame::new()
    }
}

/// Winner per position by exhaustive enumeration of positional strategies for
/// both players. Exponential; a reference for testing the recursive solver.
pub fn brute_force_winners(g: &ParityGame) -> Vec<Player> {
    let n = g.len();
    let strategies = |player: Player| -> Vec<Vec<Option<usize>>> {
        let mut all: Vec<Vec<Option<usize>>> = vec![Vec::new()];
        for v in 0..n {
            let choices: Vec<Option<usize>> = if g.owner[v] == player && !g.moves[v].is_empty() {
                g.moves[v].iter().map(|&u| Some(u)).collect()
            } else {
                vec![None]
            };
            all = all
                .into_iter()
                .flat_map(|pfx| {
                    choices.iter().map(move |c| {
                        let mut s = pfx.clone();
                        s.push(*c);
                        s
                    })
                })
                .collect();
        }
        all
    };
    let verifier_strats = strategies(Player::Verifier);
    let pathfinder_strats = strategies(Player::Pathfinder);
    (0..n)
        .map(|start| {
            let exists_winning = verifier_strats.iter().any(|sv| {
                pathfinder_strats
                    .iter()
                    .all(|sp| play_winner(g, start, sv, sp) == Player::Verifier)
            });
            if exists_winning {
                Player::Verifier
            } else {
                Player::Pathfinder
            }
        })
        .collect()
}

/// Outcome of the unique play from `start` under two positional strategies.
fn play_winner(
    g: &ParityGame,
    start: usize,
    sv: &[Option<usize>],
    sp: &[Option<usize>],
) -> Player {
    let mut seen_at = vec![usize::MAX; g.len()];
    let mut trace = Vec::new();
    let mut cur = start;
    loop {
        if seen_at[cur] != usize::MAX {
            let cycle = &trace[seen_at[cur]..];
            let p = cycle.iter().map(|&v| g.priority[v]).min().unwrap();
            return Player::of_priority(p);
        }
        seen_at[cur] = trace.len();
        trace.push(cur);
        let pick = match g.owner[cur] {
            Player::Verifier => sv[cur],
            Player::Pathfinder => sp[cur],
        };
        match pick {
            Some(u) => cur = u,
            None => return g.owner[cur].opponent(),
        }
    }
}
