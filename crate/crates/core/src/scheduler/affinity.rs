//! Best-effort core pinning and real-time priority for the calling thread.

#[cfg(target_os = "linux")]
pub fn pin_to_core(core: usize) -> Result<(), String> {
    // SAFETY: cpu_set_t is plain data; the set is fully initialized before
    // the call and only read by the kernel.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(core, &mut set);
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err(std::io::Error::last_os_error().to_string());
        }
    }
    Ok(())
}

#[cfg(target_os = "linux")]
pub fn raise_priority() -> Result<(), String> {
    // SAFETY: pthread_self is always valid for the calling thread and the
    // param struct outlives the call.
    unsafe {
        let param = libc::sched_param { sched_priority: 1 };
        let rc = libc::pthread_setschedparam(libc::pthread_self(), libc::SCHED_FIFO, &param);
        if rc != 0 {
            return Err(std::io::Error::from_raw_os_error(rc).to_string());
        }
    }
    Ok(())
}

#[cfg(not(target_os = "linux"))]
pub fn pin_to_core(_core: usize) -> Result<(), String> {
    Err("not supported on this platform".into())
}

#[cfg(not(target_os = "linux"))]
pub fn raise_priority() -> Result<(), String> {
    Err("not supported on this platform".into())
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
