fn main() -> std::process::ExitCode {
    debtor_strategy::cli::main()
}
