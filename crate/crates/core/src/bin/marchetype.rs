fn main() -> std::process::ExitCode {
    marchetype::cli::main()
}
