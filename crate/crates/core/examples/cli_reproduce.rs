//! Drive the command-line interface in-process: the acceptance table.
//!
//! Same as `raman-scatter reproduce --seed 2018`.

fn main() {
    let code = raman_scatter::cli::run(["raman-scatter", "reproduce", "--seed", "2018"]);
    println!("exit code {code}");
}
