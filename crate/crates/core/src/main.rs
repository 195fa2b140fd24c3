fn main() {
    std::process::exit(saddle_llr::experiments::cli::main_from_env());
}
