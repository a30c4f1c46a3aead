fn main() -> std::process::ExitCode {
    raman_scatter::cli::main()
}
