//! Flush-to-zero for subnormal floats on the current thread.
//!
//! Saturated gates and Adam moments drift into the subnormal range once the
//! training loss nears zero, where arithmetic is dramatically slower. The
//! guard sets the flush bits of the floating-point control register and
//! restores the old value on drop.

pub struct FlushSubnormals {
    saved: u64,
}

#[cfg(target_arch = "x86_64")]
mod imp {
    use std::arch::asm;

    const FTZ: u32 = 1 << 15;
    const DAZ: u32 = 1 << 6;

    pub fn enter() -> u64 {
        let mut csr: u32 = 0;
        unsafe {
            asm!("stmxcsr [{}]", in(reg) &mut csr, options(nostack));
            let new = csr | FTZ | DAZ;
            asm!("ldmxcsr [{}]", in(reg) &new, options(nostack, readonly));
        }
        csr as u64
    }

    pub fn leave(saved: u64) {
        let csr = saved as u32;
        unsafe { asm!("ldmxcsr [{}]", in(reg) &csr, options(nostack, readonly)) };
    }
}

#[cfg(target_arch = "aarch64")]
mod imp {
    use std::arch::asm;

    const FZ: u64 = 1 << 24;

    pub fn enter() -> u64 {
        let fpcr: u64;
        unsafe {
            asm!("mrs {}, fpcr", out(reg) fpcr, options(nomem, nostack));
            asm!("msr fpcr, {}", in(reg) fpcr | FZ, options(nomem, nostack));
        }
        fpcr
    }

    pub fn leave(saved: u64) {
        unsafe { asm!("msr fpcr, {}", in(reg) saved, options(nomem, nostack)) };
    }
}

#[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
mod imp {
    pub fn enter() -> u64 {
        0
    }

    pub fn leave(_: u64) {}
}

impl FlushSubnormals {
    pub fn new() -> Self {
        Self { saved: imp::enter() }
    }
}

impl Default for FlushSubnormals {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for FlushSubnormals {
    fn drop(&mut self) {
        imp::leave(self.saved);
    }
}
