fn main() -> std::process::ExitCode {
    immerse::cli::main()
}
