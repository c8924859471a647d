//! Event-exact walkthrough of three tiny scenarios: an SRPT preemption, an
//! exact residual tie (the incumbent keeps the server), and FIFO on the same
//! input showing the policy-invariant workload. Prints event logs and
//! departure times.

fn main() {
    print!("{}", srptlab::experiment::demo().unwrap());
}
