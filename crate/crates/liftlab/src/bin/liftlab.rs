fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(liftlab::cli::run())
}
