fn main() -> std::process::ExitCode {
    factor_rlct::cli::main()
}
