fn main() {
    if let Ok(v) = std::env::var("PRESSURE_LAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: PRESSURE_LAB_THREADS must be a positive integer, got '{v}'");
                std::process::exit(pressure_lab_cli::EXIT_VALIDATION);
            }
        }
    }
    std::process::exit(pressure_lab_cli::run_command(std::env::args_os()));
}
