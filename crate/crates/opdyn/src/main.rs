fn main() -> std::process::ExitCode {
    opdyn::cli::main()
}
